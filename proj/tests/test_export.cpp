#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "cppll/export.hpp"

using namespace cppll;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Fmt, RoundTripsDoubles) {
  for (const double x : {0.1, 1.0 / 3.0, -2.5e-300, 1.1171e-6, 6.02214076e23}) {
    EXPECT_EQ(std::stod(io::fmt(x)), x);
  }
  EXPECT_EQ(io::fmt(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::fmt(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Json, NonFiniteStatesBecomeStrings) {
  const auto j = io::to_json(DiscreteState{std::nan(""), 0.5});
  EXPECT_EQ(j["p"], "nan");
  EXPECT_EQ(j["u"], 0.5);
  // Serialising must not throw or emit bare NaN.
  EXPECT_EQ(j.dump().find("NaN"), std::string::npos);
}

TEST(Json, TrajectoryCarriesOverloadTag) {
  IterateOptions o;
  o.max_steps = 50;
  const auto t = iterate({-0.5, 0.0}, {1.5, 0.2}, o);
  ASSERT_EQ(t.termination, Termination::Overloaded);
  const auto j = io::to_json(t);
  EXPECT_EQ(j["termination"], "Overloaded");
  EXPECT_TRUE(j.contains("overload"));
  EXPECT_EQ(j["states"].size(), t.states.size());
  EXPECT_EQ(j["branches"].size(), t.branches.size());
}

TEST(Csv, TrajectoryHeaderAndRows) {
  const auto t = iterate({0.1, 0.1}, {0.5, 1.0});
  std::ostringstream os;
  io::write_csv(os, t);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), t.states.size() + 1);
  EXPECT_EQ(ls[0], "step,p,u,branch");
  EXPECT_EQ(ls[1].rfind("0,0.1,0.1,", 0), 0u);
  // The last state has no outgoing branch.
  EXPECT_EQ(ls.back().back(), ',');
}

TEST(Csv, BasinHeaderAndCellCount) {
  const auto g = sweep::basin_map({0.5, 1.0}, {-0.2, 0.2, 4}, {-0.2, 0.2, 3});
  std::ostringstream os;
  io::write_csv(os, g);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 13u);
  EXPECT_EQ(ls[0], "p,u,class,code,period,first_step,first_code,steps");
  for (std::size_t k = 1; k < ls.size(); ++k) EXPECT_NE(ls[k].find(",Locked,0,0,"), std::string::npos) << ls[k];
}

TEST(Csv, CyclesHeader) {
  std::ostringstream os;
  io::write_csv(os, std::vector<cycles::Cycle>{*cycles::period3({0.2, 1.6})});
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "cycle,period,stability,index,p,u,branch");
}

TEST(Svg, FirstStepPalette) {
  // One column per sign of p: QuadPos (red) on the right, LinNeg (blue) on the left.
  const auto g = sweep::basin_map({0.5, 1.0}, {-0.1, 0.1, 2}, {0.0, 0.0, 1});
  std::ostringstream os;
  io::write_svg(os, g, io::BasinColoring::FirstStep);
  const auto s = os.str();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("fill=\"#e41a1c\""), std::string::npos);
  EXPECT_NE(s.find("fill=\"#377eb8\""), std::string::npos);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
}

TEST(Svg, OverloadIsBlack) {
  const auto g = sweep::basin_map({0.3, 0.6}, {-0.95, -0.9, 2}, {-0.2, 0.0, 2});
  ASSERT_GT(g.counts().overload, 0u);
  std::ostringstream os;
  io::write_svg(os, g, io::BasinColoring::FirstStep);
  EXPECT_NE(os.str().find("fill=\"#000000\""), std::string::npos);
}
