#include "cppll/export.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace cppll::io {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

// NaN / inf are not valid JSON numbers.
json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

std::string s(std::string_view v) { return std::string(v); }

}  // namespace

json to_json(const PhysicalParameters& p) {
  return {{"resistance_ohms", p.resistance_ohms},
          {"capacitance_farads", p.capacitance_farads},
          {"vco_gain_hz_per_volt", p.vco_gain_hz_per_volt},
          {"pump_current_amps", p.pump_current_amps},
          {"ref_period_seconds", p.ref_period_seconds},
          {"vco_free_hz", p.vco_free_hz}};
}

json to_json(const NormalizedParameters& p) { return {{"alpha", p.alpha}, {"beta", p.beta}}; }

json to_json(const DiscreteState& st) { return {{"p", num(st.p)}, {"u", num(st.u)}}; }

json to_json(const Trajectory& t) {
  json states = json::array();
  for (const auto& st : t.states) states.push_back(to_json(st));
  json branches = json::array();
  for (BranchId b : t.branches) branches.push_back(s(to_string(b)));
  json j = {{"states", states}, {"branches", branches}, {"termination", s(to_string(t.termination))}};
  if (t.termination == Termination::Overloaded) j["overload"] = s(to_string(t.overload));
  return j;
}

json to_json(const oracle::EventLog& log) {
  json events = json::array();
  for (const auto& e : log.events) {
    events.push_back({{"time", e.time},
                      {"kind", s(oracle::to_string(e.kind))},
                      {"pfd_before", s(oracle::to_string(e.pfd_before))},
                      {"pfd_after", s(oracle::to_string(e.pfd_after))},
                      {"v_c", e.v_c},
                      {"v_F", e.v_f},
                      {"omega_vco", e.omega_vco}});
  }
  json pulses = json::array();
  for (const auto& p : log.pulses) {
    pulses.push_back({{"t_start", p.t_start}, {"tau_seconds", p.tau_seconds}, {"v_volts", p.v_volts}});
  }
  return {{"events", events}, {"pulses", pulses}, {"stop", s(oracle::to_string(log.stop))}};
}

json to_json(const cycles::Cycle& c) {
  json pts = json::array();
  for (const auto& p : c.points) pts.push_back(to_json(p));
  json it = json::array();
  for (BranchId b : c.itinerary) it.push_back(s(to_string(b)));
  json mult = json::array();
  for (const auto& m : c.multipliers) mult.push_back({{"re", m.real()}, {"im", m.imag()}, {"abs", std::abs(m)}});
  json j = {{"period", c.period}, {"points", pts}, {"itinerary", it}, {"multipliers", mult}};
  if (c.classified) {
    j["stability"] = s(cycles::to_string(c.stability));
    j["touches_boundary"] = c.touches_boundary;
    if (c.perturbation) j["perturbation"] = s(cycles::to_string(*c.perturbation));
  }
  return j;
}

json to_json(const stability::RangeBound& r) {
  return {{"period_seconds", r.period_seconds},
          {"binding", s(stability::to_string(r.binding))},
          {"beta_term_seconds", r.beta_term},
          {"alpha_term_seconds", r.alpha_term}};
}

json matrix_json(const stability::Mat2& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

json to_json(const stability::CertificateResult& r) {
  json j = {{"certified", r.certified},
            {"H", matrix_json(r.certificate.h)},
            {"eta", r.certificate.eta},
            {"net_points", r.net_points},
            {"net_exponent", r.net_exponent}};
  if (r.certified) {
    j["m"] = r.certificate.m;
    j["exact_ratio"] = r.exact_ratio;
  } else {
    j["failure"] = r.failure;
  }
  return j;
}

json to_json(const stability::Witness& w) {
  return {{"lambda1", w.lambda1},
          {"lambda2", w.lambda2},
          {"x1", {{"p", w.x1(0)}, {"u", w.x1(1)}}},
          {"a3x1", {{"p", w.a3x1(0)}, {"u", w.a3x1(1)}}},
          {"orbit", to_json(w.orbit)}};
}

json to_json(const sweep::BasinGrid& g, bool include_cells) {
  const auto c = g.counts();
  json j = {{"normalized", to_json(g.np)},
            {"p_axis", {{"min", g.p_axis.min}, {"max", g.p_axis.max}, {"count", g.p_axis.count}}},
            {"u_axis", {{"min", g.u_axis.min}, {"max", g.u_axis.max}, {"count", g.u_axis.count}}},
            {"max_steps", g.opts.max_steps},
            {"lock_tolerance", g.opts.lock_tolerance},
            {"cycle_tolerance", g.opts.cycle_tolerance},
            {"counts",
             {{"Locked", c.locked}, {"Cycle", c.cycle}, {"Overload", c.overload}, {"Diverged", c.diverged},
              {"Undecided", c.undecided}}}};
  json periods = json::object();
  for (const auto& cell : g.cells) {
    if (cell.cls == sweep::StateClass::Cycle) {
      auto& v = periods[std::to_string(cell.period)];
      v = v.is_null() ? 1 : v.get<int>() + 1;
    }
  }
  j["cycle_periods"] = periods;
  if (include_cells) {
    json cells = json::array();
    for (const auto& cell : g.cells) {
      cells.push_back({static_cast<int>(cell.cls), cell.period, static_cast<int>(cell.first)});
    }
    j["cells"] = cells;
    j["cell_layout"] = "row-major over (p, u); entries [class_code, period, first_step_code]";
  }
  return j;
}

json to_json(const sweep::ParamGrid& g, bool include_cells) {
  std::array<std::size_t, 4> counts{};
  for (const auto& cell : g.cells) ++counts[static_cast<std::size_t>(cell.cls)];
  json j = {{"alpha_axis", {{"min", g.alpha_axis.min}, {"max", g.alpha_axis.max}, {"count", g.alpha_axis.count}}},
            {"beta_axis", {{"min", g.beta_axis.min}, {"max", g.beta_axis.max}, {"count", g.beta_axis.count}}},
            {"initial_set_size", g.initial_set_size},
            {"counts",
             {{"Stable", counts[0]}, {"CycleRegion", counts[1]}, {"Unstable", counts[2]},
              {"OverloadAtLock", counts[3]}}}};
  if (include_cells) {
    json cells = json::array();
    for (const auto& cell : g.cells) {
      cells.push_back({static_cast<int>(cell.cls), cell.period2, cell.period3, cell.initial_locked});
    }
    j["cells"] = cells;
    j["cell_layout"] = "row-major over (alpha, beta); entries [class_code, period2, period3, initial_locked]";
  }
  return j;
}

json to_json(const sweep::PullInProbe& p) {
  json j = {{"t_ref_seconds", p.t_ref_seconds},
            {"normalized", to_json(p.np)},
            {"all_locked", p.all_locked},
            {"scanned", p.scanned},
            {"locked", p.locked},
            {"overloaded", p.overloaded}};
  if (p.first_failure) j["first_failure"] = to_json(*p.first_failure);
  if (p.failure_cell) {
    j["failure_class"] = s(sweep::to_string(p.failure_cell->cls));
    if (p.failure_cell->cls == sweep::StateClass::Cycle) j["failure_period"] = p.failure_cell->period;
  }
  return j;
}

json to_json(const sweep::PullInResult& r) {
  json probes = json::array();
  for (const auto& p : r.probes) probes.push_back(to_json(p));
  json j = {{"estimate_seconds", r.estimate_seconds ? json(*r.estimate_seconds) : json(nullptr)},
            {"empty_range", !r.estimate_seconds.has_value()},
            {"failing_t_ref_seconds", r.failing_t_ref_seconds ? json(*r.failing_t_ref_seconds) : json(nullptr)},
            {"probes", probes},
            {"findings", r.findings}};
  if (r.first_failure) j["first_failure"] = to_json(*r.first_failure);
  return j;
}

void write_csv(std::ostream& os, const Trajectory& t) {
  os << "step,p,u,branch\n";
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    os << k << ',' << fmt(t.states[k].p) << ',' << fmt(t.states[k].u) << ',';
    if (k < t.branches.size()) os << to_string(t.branches[k]);
    os << '\n';
  }
}

void write_csv(std::ostream& os, const oracle::EventLog& log) {
  os << "time,kind,v_c,v_F,omega_vco\n";
  for (const auto& e : log.events) {
    os << fmt(e.time) << ',' << oracle::to_string(e.kind) << ',' << fmt(e.v_c) << ',' << fmt(e.v_f) << ','
       << fmt(e.omega_vco) << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<cycles::Cycle>& cs) {
  os << "cycle,period,stability,index,p,u,branch\n";
  for (std::size_t c = 0; c < cs.size(); ++c) {
    for (std::size_t i = 0; i < cs[c].points.size(); ++i) {
      os << c << ',' << cs[c].period << ',' << (cs[c].classified ? cycles::to_string(cs[c].stability) : "")
         << ',' << i << ',' << fmt(cs[c].points[i].p) << ',' << fmt(cs[c].points[i].u) << ','
         << (i < cs[c].itinerary.size() ? to_string(cs[c].itinerary[i]) : "") << '\n';
    }
  }
}

void write_csv(std::ostream& os, const sweep::BasinGrid& g) {
  os << "p,u,class,code,period,first_step,first_code,steps\n";
  for (std::size_t i = 0; i < g.p_axis.count; ++i) {
    for (std::size_t j = 0; j < g.u_axis.count; ++j) {
      const auto& c = g.at(i, j);
      os << fmt(g.p_axis.value(i)) << ',' << fmt(g.u_axis.value(j)) << ',' << sweep::to_string(c.cls) << ','
         << static_cast<int>(c.cls) << ',' << static_cast<int>(c.period) << ',' << sweep::to_string(c.first)
         << ',' << static_cast<int>(c.first) << ',' << c.steps << '\n';
    }
  }
}

void write_csv(std::ostream& os, const sweep::ParamGrid& g) {
  os << "alpha,beta,class,code,period2,period3,initial_locked\n";
  for (std::size_t i = 0; i < g.alpha_axis.count; ++i) {
    for (std::size_t j = 0; j < g.beta_axis.count; ++j) {
      const auto& c = g.at(i, j);
      os << fmt(g.alpha_axis.value(i)) << ',' << fmt(g.beta_axis.value(j)) << ',' << sweep::to_string(c.cls)
         << ',' << static_cast<int>(c.cls) << ',' << c.period2 << ',' << c.period3 << ',' << c.initial_locked
         << '\n';
    }
  }
}

namespace {

constexpr int kPlot = 560;
constexpr int kMargin = 40;
constexpr int kSize = 640;

struct LegendEntry {
  const char* label;
  const char* color;
};

// Heatmap with x along the first axis and y (upwards) along the second.
template <class ColorOf>
void heatmap(std::ostream& os, const sweep::Axis& x, const sweep::Axis& y, const char* x_label,
             const char* y_label, const std::vector<LegendEntry>& legend, ColorOf&& color_of) {
  const double cw = static_cast<double>(kPlot) / static_cast<double>(x.count);
  const double ch = static_cast<double>(kPlot) / static_cast<double>(y.count);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize + 40
     << "\" viewBox=\"0 0 " << kSize << ' ' << kSize + 40 << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < x.count; ++i) {
    for (std::size_t j = 0; j < y.count; ++j) {
      const double px = kMargin + cw * static_cast<double>(i);
      const double py = kMargin + kPlot - ch * static_cast<double>(j + 1);
      os << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\"" << fmt(cw) << "\" height=\""
         << fmt(ch) << "\" fill=\"" << color_of(i, j) << "\"/>\n";
    }
  }
  os << "</g>\n<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot << "\" height=\"" << kPlot
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << kMargin << "\" y=\"" << kMargin + kPlot + 15 << "\">" << fmt(x.min) << "</text>\n";
  os << "<text x=\"" << kMargin + kPlot << "\" y=\"" << kMargin + kPlot + 15 << "\" text-anchor=\"end\">"
     << fmt(x.max) << "</text>\n";
  os << "<text x=\"" << kMargin + kPlot / 2 << "\" y=\"" << kMargin + kPlot + 15 << "\" text-anchor=\"middle\">"
     << x_label << "</text>\n";
  os << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + kPlot << "\" text-anchor=\"end\">" << fmt(y.min)
     << "</text>\n";
  os << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 10 << "\" text-anchor=\"end\">" << fmt(y.max)
     << "</text>\n";
  os << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + kPlot / 2 << "\" text-anchor=\"end\">" << y_label
     << "</text>\n";
  int lx = kMargin;
  const int ly = kMargin + kPlot + 30;
  for (const auto& e : legend) {
    os << "<rect x=\"" << lx << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\"" << e.color
       << "\" stroke=\"black\"/>\n<text x=\"" << lx + 16 << "\" y=\"" << ly << "\">" << e.label << "</text>\n";
    lx += 110;
  }
  os << "</g>\n</svg>\n";
}

const std::array<const char*, 5> kFirstStepColors = {"#e41a1c", "#4daf4a", "#377eb8", "#ffd700", "#000000"};
const std::array<const char*, 5> kFateColors = {"#a6d96a", "#d7191c", "#000000", "#7b3294", "#bababa"};
const std::array<const char*, 4> kParamColors = {"#a6d96a", "#fdae61", "#d7191c", "#404040"};

}  // namespace

void write_svg(std::ostream& os, const sweep::BasinGrid& g, BasinColoring coloring) {
  if (coloring == BasinColoring::FirstStep) {
    heatmap(os, g.p_axis, g.u_axis, "p", "u",
            {{"QuadPos", kFirstStepColors[0]},
             {"FracPos", kFirstStepColors[1]},
             {"LinNeg", kFirstStepColors[2]},
             {"QuadNeg", kFirstStepColors[3]},
             {"overload", kFirstStepColors[4]}},
            [&](std::size_t i, std::size_t j) { return kFirstStepColors[static_cast<std::size_t>(g.at(i, j).first)]; });
  } else {
    heatmap(os, g.p_axis, g.u_axis, "p", "u",
            {{"Locked", kFateColors[0]},
             {"Cycle", kFateColors[1]},
             {"Overload", kFateColors[2]},
             {"Diverged", kFateColors[3]},
             {"Undecided", kFateColors[4]}},
            [&](std::size_t i, std::size_t j) { return kFateColors[static_cast<std::size_t>(g.at(i, j).cls)]; });
  }
}

void write_svg(std::ostream& os, const sweep::ParamGrid& g) {
  heatmap(os, g.alpha_axis, g.beta_axis, "alpha", "beta",
          {{"Stable", kParamColors[0]},
           {"CycleRegion", kParamColors[1]},
           {"Unstable", kParamColors[2]},
           {"OverloadAtLock", kParamColors[3]}},
          [&](std::size_t i, std::size_t j) { return kParamColors[static_cast<std::size_t>(g.at(i, j).cls)]; });
}

}  // namespace cppll::io
