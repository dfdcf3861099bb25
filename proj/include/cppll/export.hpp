// JSON, CSV and SVG writers for the analysis results.
#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "cppll/cycles.hpp"
#include "cppll/model.hpp"
#include "cppll/oracle.hpp"
#include "cppll/stability.hpp"
#include "cppll/sweep.hpp"

namespace cppll::io {

using nlohmann::json;

json to_json(const PhysicalParameters& p);
json to_json(const NormalizedParameters& p);
json to_json(const DiscreteState& s);
json to_json(const Trajectory& t);
json to_json(const oracle::EventLog& log);
json to_json(const cycles::Cycle& c);
json to_json(const stability::RangeBound& r);
json to_json(const stability::CertificateResult& r);
json to_json(const stability::Witness& w);
json to_json(const sweep::BasinGrid& g, bool include_cells = true);
json to_json(const sweep::ParamGrid& g, bool include_cells = true);
json to_json(const sweep::PullInProbe& p);
json to_json(const sweep::PullInResult& r);
json matrix_json(const stability::Mat2& m);

/// Columns: step,p,u,branch (branch taken from that state; empty on the last row).
void write_csv(std::ostream& os, const Trajectory& t);
/// Columns: time,kind,v_c,v_F,omega_vco.
void write_csv(std::ostream& os, const oracle::EventLog& log);
/// Columns: cycle,period,stability,index,p,u,branch.
void write_csv(std::ostream& os, const std::vector<cycles::Cycle>& cs);
/// Columns: p,u,class,code,period,first_step,first_code,steps.
void write_csv(std::ostream& os, const sweep::BasinGrid& g);
/// Columns: alpha,beta,class,code,period2,period3,initial_locked.
void write_csv(std::ostream& os, const sweep::ParamGrid& g);

enum class BasinColoring { FirstStep, Fate };

/// 640x640 heatmap with a legend strip. FirstStep colours follow the branch
/// legend: QuadPos red, FracPos green, LinNeg blue, QuadNeg yellow,
/// overload black.
void write_svg(std::ostream& os, const sweep::BasinGrid& g, BasinColoring coloring);
void write_svg(std::ostream& os, const sweep::ParamGrid& g);

/// Shortest decimal text that reads back to the same double.
std::string fmt(double x);

}  // namespace cppll::io
