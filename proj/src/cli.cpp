#include "cppll/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <omp.h>

#include "cppll/cycles.hpp"
#include "cppll/export.hpp"
#include "cppll/model.hpp"
#include "cppll/oracle.hpp"
#include "cppll/stability.hpp"
#include "cppll/sweep.hpp"

namespace cppll::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kPhysicalKeys = {"resistance_ohms",    "capacitance_farads",
                                                "vco_gain_hz_per_volt", "pump_current_amps",
                                                "ref_period_seconds", "vco_free_hz"};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

double number_at(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

// Typed access to "options" that records the resolved value of every key
// read and rejects keys the command does not use.
class Options {
 public:
  explicit Options(const json& opts) : given_(opts.is_null() ? json::object() : opts) {
    if (!given_.is_object()) throw ConfigError("options must be a JSON object");
  }

  double num(const std::string& key, double def) {
    const json v = take(key, def);
    if (!v.is_number()) throw ConfigError("options." + key + " must be a number");
    return v.get<double>();
  }

  std::size_t count(const std::string& key, std::size_t def) {
    const json v = take(key, def);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("options." + key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  bool flag(const std::string& key, bool def) {
    const json v = take(key, def);
    if (!v.is_boolean()) throw ConfigError("options." + key + " must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& def, const std::set<std::string>& choices) {
    const json v = take(key, def);
    if (!v.is_string() || !choices.count(v.get<std::string>())) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      throw ConfigError("options." + key + " must be one of: " + list);
    }
    return v.get<std::string>();
  }

  json raw(const std::string& key, const json& def) { return take(key, def); }

  // Call once every option has been read.
  void finish() const {
    for (const auto& [k, v] : given_.items()) {
      if (!resolved_.contains(k)) throw ConfigError("unknown option '" + k + "' for this command");
    }
  }

  const json& resolved() const { return resolved_; }

 private:
  json take(const std::string& key, const json& def) {
    json v = given_.contains(key) ? given_.at(key) : def;
    resolved_[key] = v;
    return v;
  }

  json given_;
  json resolved_ = json::object();
};

struct Context {
  json config;  // as given, minus options
  std::optional<PhysicalParameters> phys;
  std::optional<NormalizedParameters> np;
  std::optional<DiscreteState> initial;
  std::optional<std::pair<double, double>> initial_physical;  // tau0, v0
  Options opts;
  std::string format;

  explicit Context(const json& cfg) : opts(cfg.value("options", json::object())) {}

  const NormalizedParameters& normalized(const char* cmd) const {
    if (!np) throw ConfigError(std::string(cmd) + " needs a \"physical\" or \"normalized\" parameter block");
    return *np;
  }
  const PhysicalParameters& physical(const char* cmd) const {
    if (!phys) throw ConfigError(std::string(cmd) + " needs a \"physical\" parameter block");
    return *phys;
  }
  const DiscreteState& state(const char* cmd) const {
    if (!initial) throw ConfigError(std::string(cmd) + " needs an \"initial\" block");
    return *initial;
  }
};

Context parse_config(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(cfg, {"schema", "physical", "normalized", "initial", "options", "format"}, "config");
  if (cfg.contains("schema") && cfg.at("schema") != json(1)) throw ConfigError("unsupported schema; expected 1");

  Context ctx(cfg);
  ctx.config = cfg;
  ctx.config["schema"] = 1;
  ctx.config.erase("options");

  const bool has_phys = cfg.contains("physical");
  const bool has_norm = cfg.contains("normalized");
  if (has_phys && has_norm) throw ConfigError("\"physical\" and \"normalized\" blocks are mutually exclusive");
  if (has_phys) {
    const json& p = cfg.at("physical");
    check_keys(p, std::set<std::string>(kPhysicalKeys.begin(), kPhysicalKeys.end()), "physical");
    PhysicalParameters ph;
    ph.resistance_ohms = number_at(p, "resistance_ohms", "physical");
    ph.capacitance_farads = number_at(p, "capacitance_farads", "physical");
    ph.vco_gain_hz_per_volt = number_at(p, "vco_gain_hz_per_volt", "physical");
    ph.pump_current_amps = number_at(p, "pump_current_amps", "physical");
    ph.ref_period_seconds = number_at(p, "ref_period_seconds", "physical");
    ph.vco_free_hz = number_at(p, "vco_free_hz", "physical");
    ph.validate();
    ctx.phys = ph;
    ctx.np = normalize(ph);
  } else if (has_norm) {
    const json& n = cfg.at("normalized");
    check_keys(n, {"alpha", "beta"}, "normalized");
    NormalizedParameters np{number_at(n, "alpha", "normalized"), number_at(n, "beta", "normalized")};
    np.validate();
    ctx.np = np;
  }

  if (cfg.contains("initial")) {
    const json& in = cfg.at("initial");
    check_keys(in, {"p", "u", "tau0_seconds", "v0_volts"}, "initial");
    const bool norm_form = in.contains("p") || in.contains("u");
    const bool phys_form = in.contains("tau0_seconds") || in.contains("v0_volts");
    if (norm_form && phys_form) throw ConfigError("initial: give either {p, u} or {tau0_seconds, v0_volts}");
    if (norm_form) {
      ctx.initial = DiscreteState{number_at(in, "p", "initial"), number_at(in, "u", "initial")};
    } else if (phys_form) {
      if (!ctx.phys) throw ConfigError("initial {tau0_seconds, v0_volts} needs a \"physical\" block");
      const double tau0 = number_at(in, "tau0_seconds", "initial");
      const double v0 = number_at(in, "v0_volts", "initial");
      ctx.initial_physical = {tau0, v0};
      ctx.initial = DiscreteState{tau0 / ctx.phys->ref_period_seconds, oracle::u_from_voltage(*ctx.phys, v0)};
    }
    if (ctx.initial && !(std::isfinite(ctx.initial->p) && std::isfinite(ctx.initial->u))) {
      throw ConfigError("initial state must be finite");
    }
  }

  ctx.format = cfg.value("format", std::string("json"));
  return ctx;
}

sweep::Axis axis(Options& o, const std::string& name, double lo, double hi, std::size_t n) {
  sweep::Axis a{o.num(name + "_min", lo), o.num(name + "_max", hi), o.count(name + "_count", n)};
  a.validate(name.c_str());
  return a;
}

sweep::BasinOptions basin_options(Options& o, std::size_t max_steps) {
  sweep::BasinOptions b;
  b.max_steps = o.count("max_steps", max_steps);
  b.lock_tolerance = o.num("lock_tolerance", b.lock_tolerance);
  b.lock_window = o.count("lock_window", b.lock_window);
  b.cycle_tolerance = o.num("cycle_tolerance", b.cycle_tolerance);
  b.max_cycle_period = o.count("max_cycle_period", b.max_cycle_period);
  if (b.max_cycle_period < 1 || b.max_cycle_period > 32) throw ConfigError("max_cycle_period must lie in [1, 32]");
  if (b.lock_window < 1) throw ConfigError("lock_window must be >= 1");
  return b;
}

// Result of one command before formatting.
struct Output {
  json result;
  std::function<void(std::ostream&)> csv;
  std::function<void(std::ostream&)> svg;
  std::optional<std::string> failure;  // set for exit code 3
};

Output cmd_simulate(Context& c) {
  const auto& np = c.normalized("simulate");
  IterateOptions io;
  io.max_steps = c.opts.count("max_steps", 1000);
  io.lock_tolerance = c.opts.num("lock_tolerance", io.lock_tolerance);
  io.lock_window = c.opts.count("lock_window", io.lock_window);
  io.divergence_bound = c.opts.num("divergence_bound", io.divergence_bound);
  c.opts.finish();
  const Trajectory t = iterate(c.state("simulate"), np, io);
  Output o;
  o.result = {{"normalized", io::to_json(np)},
              {"initial", io::to_json(t.states.front())},
              {"steps", t.branches.size()},
              {"final", io::to_json(t.states.back())},
              {"trajectory", io::to_json(t)}};
  o.csv = [t](std::ostream& os) { io::write_csv(os, t); };
  return o;
}

Output cmd_oracle(Context& c) {
  const auto& phys = c.physical("oracle");
  oracle::SimulateOptions so;
  so.horizon_events = c.opts.count("horizon_events", so.horizon_events);
  so.lock_tolerance = c.opts.num("lock_tolerance", so.lock_tolerance);
  so.lock_window = c.opts.count("lock_window", so.lock_window);
  c.opts.finish();
  const DiscreteState& s0 = c.state("oracle");
  oracle::ContinuousState cs;
  try {
    cs = c.initial_physical ? oracle::start_state(phys, c.initial_physical->first, c.initial_physical->second)
                            : oracle::start_state(phys, s0);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("initial state not realizable: ") + e.what());
  }
  const oracle::EventLog log = oracle::simulate(cs, phys, so);
  json discrete = json::array();
  for (const auto& s : oracle::extract_discrete(log, phys)) discrete.push_back(io::to_json(s));
  Output o;
  o.result = io::to_json(log);
  o.result["normalized"] = io::to_json(*c.np);
  o.result["discrete"] = discrete;
  o.csv = [log](std::ostream& os) { io::write_csv(os, log); };
  return o;
}

Output cmd_range(Context& c, bool hold) {
  const auto& phys = c.physical(hold ? "holdin" : "pullin-bound");
  c.opts.finish();
  const auto r = hold ? stability::hold_in(phys) : stability::pull_in_bound(phys);
  PhysicalParameters at = phys;
  at.ref_period_seconds = r.period_seconds;
  Output o;
  o.result = io::to_json(r);
  o.result["normalized_at_bound"] = io::to_json(normalize(at));
  o.result["normalized"] = io::to_json(*c.np);
  o.result["ref_period_inside"] = phys.ref_period_seconds < r.period_seconds;
  return o;
}

Output cmd_pullin_empirical(Context& c) {
  const auto& phys = c.physical("pullin-empirical");
  const double hold = stability::hold_in(phys).period_seconds;
  sweep::PullInOptions po;
  const double t_min = c.opts.num("t_min_seconds", 0.1 * hold);
  const double t_max = c.opts.num("t_max_seconds", 0.999 * hold);
  po.samples = c.opts.count("samples", po.samples);
  po.p_min = c.opts.num("p_min", po.p_min);
  po.p_max = c.opts.num("p_max", po.p_max);
  po.u_min = c.opts.num("u_min", po.u_min);
  po.u_max = c.opts.num("u_max", po.u_max);
  po.seed = c.opts.count("seed", 0);
  po.scan_points = c.opts.count("scan_points", po.scan_points);
  po.check_monotonicity = c.opts.flag("check_monotonicity", po.check_monotonicity);
  po.rel_tol = c.opts.num("rel_tol", po.rel_tol);
  po.basin = basin_options(c.opts, 100000);
  po.overload = c.opts.text("overload_policy", "exclude", {"exclude", "count-as-failure"}) == "exclude"
                    ? sweep::OverloadPolicy::Exclude
                    : sweep::OverloadPolicy::CountAsFailure;
  c.opts.finish();
  if (!(t_min > 0.0 && t_max > t_min && t_max < hold)) {
    throw ConfigError("need 0 < t_min_seconds < t_max_seconds < hold-in period");
  }
  if (po.scan_points < 2) throw ConfigError("scan_points must be >= 2");
  const auto r = sweep::empirical_pull_in(phys, t_min, t_max, po);
  const auto bound = stability::pull_in_bound(phys);
  Output o;
  o.result = io::to_json(r);
  o.result["pull_in_bound"] = io::to_json(bound);
  o.result["hold_in_seconds"] = hold;
  o.result["sample_box"] = {{"p_min", po.p_min}, {"p_max", po.p_max}, {"u_min", po.u_min},
                            {"u_max", po.u_max}, {"samples", po.samples}, {"sequence", "halton(2,3)"},
                            {"overload_policy", std::string(sweep::to_string(po.overload))}};
  if (r.estimate_seconds && bound.binding == stability::Binding::Beta) {
    o.result["estimate_within_bound"] = *r.estimate_seconds <= bound.period_seconds;
  }
  return o;
}

json cycle_or_null(const std::optional<cycles::Cycle>& c, const NormalizedParameters& np) {
  if (!c) return nullptr;
  return io::to_json(cycles::classify_cycle(*c, np));
}

Output cmd_cycles(Context& c) {
  const auto& np = c.normalized("cycles");
  const std::size_t period = c.opts.count("period", 3);
  cycles::FindOptions fo;
  fo.box.p_min = c.opts.num("p_min", fo.box.p_min);
  fo.box.p_max = c.opts.num("p_max", fo.box.p_max);
  fo.box.u_min = c.opts.num("u_min", fo.box.u_min);
  fo.box.u_max = c.opts.num("u_max", fo.box.u_max);
  fo.box.p_count = c.opts.count("p_count", fo.box.p_count);
  fo.box.u_count = c.opts.count("u_count", fo.box.u_count);
  fo.displacement_tol = c.opts.num("displacement_tol", fo.displacement_tol);
  const bool analytic = c.opts.flag("analytic", true);
  c.opts.finish();
  if (period < 1 || period > 32) throw ConfigError("period must lie in [1, 32]");
  const auto r = cycles::find_cycles(np, period, fo);
  json found = json::array();
  for (const auto& cy : r.cycles) found.push_back(io::to_json(cy));
  Output o;
  o.result = {{"normalized", io::to_json(np)},
              {"period", period},
              {"cycles", found},
              {"seeds", r.seeds},
              {"candidates", r.candidates},
              {"newton_failures", r.newton_failures},
              {"rejected", r.rejected}};
  if (analytic) {
    o.result["analytic"] = {{"period2", cycle_or_null(cycles::period2(np), np)},
                            {"period3", cycle_or_null(cycles::period3(np), np)}};
  }
  o.csv = [cs = r.cycles](std::ostream& os) { io::write_csv(os, cs); };
  return o;
}

Output cmd_classify(Context& c) {
  const auto& np = c.normalized("classify");
  c.opts.finish();
  const auto cls = stability::classify_parameters(np);
  Output o;
  o.result = {{"alpha", np.alpha},
              {"beta", np.beta},
              {"class", std::string(stability::to_string(cls))},
              {"H", io::matrix_json(stability::lyapunov_matrix(np.beta))},
              {"H_positive_definite", stability::lyapunov_positive_definite(np.beta)},
              {"local_overload", local_overload(np)},
              {"startup_overload", startup_overload(np)},
              {"period2_exists", cycles::period2(np).has_value()},
              {"period3_exists", cycles::period3(np).has_value()}};
  if (np.beta > 2.0) {
    try {
      o.result["witness_lambda1"] = stability::instability_witness(np, 0).lambda1;
    } catch (const std::domain_error& e) {
      o.result["witness_error"] = e.what();
    }
  }
  return o;
}

Output cmd_certificate(Context& c) {
  const auto& np = c.normalized("certificate");
  const double eta = c.opts.num("eta", 0.5);
  stability::CertificateOptions co;
  co.max_exponent = c.opts.count("max_exponent", co.max_exponent);
  co.min_net_points = c.opts.count("min_net_points", co.min_net_points);
  c.opts.finish();
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
  const auto r = stability::contraction_certificate(np, eta, co);
  Output o;
  o.result = io::to_json(r);
  o.result["alpha"] = np.alpha;
  o.result["beta"] = np.beta;
  o.result["class"] = std::string(stability::to_string(stability::classify_parameters(np)));
  if (!r.certified) o.failure = "not certified: " + r.failure;
  return o;
}

Output cmd_witness(Context& c) {
  const auto& np = c.normalized("witness");
  const std::size_t steps = c.opts.count("orbit_steps", 20);
  const double eps = c.opts.num("epsilon", 1e-4);
  const double radius = c.opts.num("escape_radius", 1e-2);
  const std::size_t max_steps = c.opts.count("max_steps", 10000);
  c.opts.finish();
  Output o;
  o.result = {{"alpha", np.alpha}, {"beta", np.beta}};
  stability::Witness w;
  try {
    w = stability::instability_witness(np, steps);
  } catch (const std::domain_error& e) {
    o.result["error"] = e.what();
    o.failure = std::string("no witness: ") + e.what();
    return o;
  }
  o.result.update(io::to_json(w));
  // The nonlinear map started at eps * x1.
  IterateOptions io;
  io.max_steps = max_steps;
  const Trajectory t = iterate({eps * w.x1(0), eps * w.x1(1)}, np, io);
  double reach = 0.0;
  std::optional<std::size_t> escape;
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    const double r = std::hypot(t.states[k].p, t.states[k].u);
    reach = std::max(reach, r);
    if (!escape && r > radius) escape = k;
  }
  o.result["nonlinear"] = {{"epsilon", eps},
                           {"termination", std::string(to_string(t.termination))},
                           {"max_radius", reach},
                           {"escape_radius", radius},
                           {"escape_step", escape ? json(*escape) : json(nullptr)}};
  return o;
}

Output cmd_basin(Context& c) {
  const auto& np = c.normalized("basin");
  const auto pa = axis(c.opts, "p", -0.9, 0.9, 200);
  const auto ua = axis(c.opts, "u", -0.9, 3.0, 200);
  const auto bo = basin_options(c.opts, 10000);
  const std::string coloring = c.opts.text("coloring", "first-step", {"first-step", "fate"});
  const bool cells = c.opts.flag("include_cells", true);
  c.opts.finish();
  if (!(std::min(ua.min, ua.max) > -1.0)) throw ConfigError("u range must stay above -1");
  const auto g = sweep::basin_map(np, pa, ua, bo);
  Output o;
  o.result = io::to_json(g, cells);
  o.csv = [g](std::ostream& os) { io::write_csv(os, g); };
  o.svg = [g, coloring](std::ostream& os) {
    io::write_svg(os, g, coloring == "fate" ? io::BasinColoring::Fate : io::BasinColoring::FirstStep);
  };
  return o;
}

Output cmd_param_map(Context& c) {
  const auto aa = axis(c.opts, "alpha", 0.02, 1.2, 60);
  const auto ba = axis(c.opts, "beta", 0.02, 2.5, 60);
  sweep::ParamOptions po;
  po.basin = basin_options(c.opts, 10000);
  const json set = c.opts.raw("initial_set", json::array());
  const bool cells = c.opts.flag("include_cells", true);
  c.opts.finish();
  if (!set.is_array()) throw ConfigError("options.initial_set must be an array of {p, u}");
  for (const json& s : set) {
    check_keys(s, {"p", "u"}, "initial_set entry");
    po.initial_set.push_back({number_at(s, "p", "initial_set"), number_at(s, "u", "initial_set")});
  }
  if (!(std::min(aa.min, aa.max) > 0.0 && std::min(ba.min, ba.max) > 0.0)) {
    throw ConfigError("alpha and beta ranges must be positive");
  }
  const auto g = sweep::param_map(aa, ba, po);
  Output o;
  o.result = io::to_json(g, cells);
  o.csv = [g](std::ostream& os) { io::write_csv(os, g); };
  o.svg = [g](std::ostream& os) { io::write_svg(os, g); };
  return o;
}

Output cmd_overload_check(Context& c) {
  const auto& np = c.normalized("overload-check");
  const std::size_t max_steps = c.opts.count("max_steps", 1000);
  const std::size_t horizon = c.opts.count("horizon_events", 1000);
  c.opts.finish();
  Output o;
  json findings = json::array();
  bool overloaded = false;
  o.result = {{"normalized", io::to_json(np)},
              {"local_overload", local_overload(np)},
              {"startup_overload", startup_overload(np)},
              {"startup_margin", 1.0 - 2.0 * np.beta - np.alpha}};
  if (local_overload(np)) {
    overloaded = true;
    findings.push_back("local overload: alpha >= 1, the VCO is overloaded near lock");
  }
  if (startup_overload(np)) findings.push_back("startup overload possible: 1 - 2 beta - alpha <= 0");
  if (c.phys) {
    o.result["local_threshold_seconds"] = local_overload_threshold(*c.phys);
    o.result["startup_threshold_seconds"] = startup_overload_threshold(*c.phys);
  }
  if (c.initial) {
    IterateOptions io;
    io.max_steps = max_steps;
    Trajectory t;
    try {
      t = iterate(*c.initial, np, io);
      json tr = {{"termination", std::string(to_string(t.termination))}, {"steps", t.branches.size()}};
      if (t.termination == Termination::Overloaded) {
        overloaded = true;
        tr["overload"] = std::string(to_string(t.overload));
        findings.push_back("discrete map overloads after " + std::to_string(t.branches.size()) + " step(s): " +
                           std::string(to_string(t.overload)));
      }
      tr["states"] = io::to_json(t)["states"];
      o.result["discrete"] = tr;
    } catch (const InvalidStateError& e) {
      overloaded = true;
      findings.push_back(std::string("initial state already overloaded: ") + e.what());
      o.result["discrete"] = {{"termination", "InvalidState"}};
    }
    if (c.phys) {
      oracle::SimulateOptions so;
      so.horizon_events = horizon;
      try {
        const auto cs = c.initial_physical
                            ? oracle::start_state(*c.phys, c.initial_physical->first, c.initial_physical->second)
                            : oracle::start_state(*c.phys, *c.initial);
        const auto log = oracle::simulate(cs, *c.phys, so);
        o.result["continuous"] = {{"stop", std::string(oracle::to_string(log.stop))},
                                  {"events", log.events.size()},
                                  {"time_seconds", log.events.empty() ? 0.0 : log.events.back().time}};
        if (log.stop == oracle::StopReason::Overload) {
          overloaded = true;
          findings.push_back("continuous simulation reaches zero VCO frequency at t = " +
                             io::fmt(log.events.back().time) + " s");
        }
      } catch (const std::domain_error& e) {
        o.result["continuous"] = {{"stop", "NotRealizable"}, {"reason", e.what()}};
      }
    }
  }
  o.result["overloaded"] = overloaded;
  o.result["findings"] = findings;
  return o;
}

using Handler = std::function<Output(Context&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"simulate", cmd_simulate},
      {"oracle", cmd_oracle},
      {"holdin", [](Context& c) { return cmd_range(c, true); }},
      {"pullin-bound", [](Context& c) { return cmd_range(c, false); }},
      {"pullin-empirical", cmd_pullin_empirical},
      {"cycles", cmd_cycles},
      {"classify", cmd_classify},
      {"certificate", cmd_certificate},
      {"witness", cmd_witness},
      {"basin", cmd_basin},
      {"param-map", cmd_param_map},
      {"overload-check", cmd_overload_check},
  };
  return h;
}

void flatten(const json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, os);
  } else if (j.is_array() && j.size() > 16) {
    os << prefix << "  [" << j.size() << " entries]\n";
  } else if (j.is_array()) {
    bool scalar = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
    if (scalar) {
      os << prefix << "  " << j.dump() << '\n';
    } else {
      for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", os);
    }
  } else {
    os << prefix << "  " << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, h] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

int run(const std::string& command, const json& config, std::ostream& out, std::ostream& err) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) {
    err << "error: unknown command '" << command << "'\n";
    return kValidationError;
  }
  Output result;
  json echoed;
  std::string format;
  try {
    Context ctx = parse_config(config);
    format = ctx.format;
    if (format != "json" && format != "csv" && format != "table" && format != "svg") {
      throw ConfigError("format must be json, csv, table or svg");
    }
    result = it->second(ctx);
    echoed = ctx.config;
    if (!ctx.opts.resolved().empty()) echoed["options"] = ctx.opts.resolved();
    if ((format == "csv" && !result.csv) || (format == "svg" && !result.svg)) {
      throw ConfigError("format '" + format + "' is not available for " + command);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << command << " failed: " << e.what() << '\n';
    return kRuntimeFailure;
  }

  const json doc = {{"schema", 1}, {"command", command}, {"config", echoed}, {"result", result.result}};
  if (format == "json") {
    out << doc.dump(2) << '\n';
  } else if (format == "csv") {
    out << "# " << json{{"schema", 1}, {"command", command}, {"config", echoed}}.dump() << '\n';
    result.csv(out);
  } else if (format == "svg") {
    std::ostringstream body;
    result.svg(body);
    std::string svg = body.str();
    const std::string meta = "<metadata><![CDATA[" +
                             json{{"schema", 1}, {"command", command}, {"config", echoed}}.dump() +
                             "]]></metadata>\n";
    const auto pos = svg.find(">\n") + 2;  // after the opening <svg ...> line
    svg.insert(pos, meta);
    out << svg;
  } else {
    out << "command  " << command << '\n';
    flatten(result.result, "", out);
  }
  if (result.failure) {
    err << "failure: " << *result.failure << '\n';
    return kRuntimeFailure;
  }
  return kOk;
}

namespace {

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  // An output document carries its config under "config".
  if (j.is_object() && j.contains("result") && j.contains("config")) return j.at("config");
  return j;
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Charge-pump PLL simulation and analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, format, output;
  std::optional<double> alpha, beta, p0, u0, tau0, v0, eta;
  std::optional<std::size_t> period, steps, seed;
  std::optional<int> threads;
  std::map<std::string, std::optional<double>> phys_flags;
  for (const auto& k : kPhysicalKeys) phys_flags[k];
  std::vector<std::string> opt_pairs;

  app.add_option("--config", config_path, "JSON config file (an earlier output is accepted too)");
  app.add_option("--format", format, "json, csv, table or svg");
  app.add_option("--output,-o", output, "write the result to this file instead of stdout");
  app.add_option("--threads", threads, "OpenMP thread count");
  app.add_option("--seed", seed, "seed for sampled procedures (options.seed)");
  app.add_option("--alpha", alpha, "normalized alpha");
  app.add_option("--beta", beta, "normalized beta");
  for (auto& [k, v] : phys_flags) {
    std::string flag = "--" + k;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    app.add_option(flag, v, "physical." + k);
  }
  app.add_option("--p0", p0, "initial normalized pulse width");
  app.add_option("--u0", u0, "initial normalized frequency offset");
  app.add_option("--tau0-seconds", tau0, "initial signed pulse width");
  app.add_option("--v0-volts", v0, "initial filter output");
  app.add_option("--period", period, "cycle period (options.period)");
  app.add_option("--steps", steps, "iteration limit (options.max_steps)");
  app.add_option("--eta", eta, "contraction factor (options.eta)");
  app.add_option("--opt", opt_pairs, "set options.KEY=VALUE (VALUE parsed as JSON when possible)");

  static const std::map<std::string, std::string> blurbs = {
      {"simulate", "iterate the discrete map"},
      {"oracle", "event-driven continuous simulation"},
      {"holdin", "hold-in range formula"},
      {"pullin-bound", "pull-in lower bound formula"},
      {"pullin-empirical", "sampled pull-in estimate over T_ref"},
      {"cycles", "analytic and numerical periodic orbits"},
      {"classify", "local stability class of (alpha, beta)"},
      {"certificate", "Lyapunov contraction exponent"},
      {"witness", "divergent orbit of the differential for beta > 2"},
      {"basin", "state-space basin map"},
      {"param-map", "(alpha, beta) stability regions"},
      {"overload-check", "overload predicates and simulation"}};
  for (const auto& name : commands()) {
    const auto it = blurbs.find(name);
    app.add_subcommand(name, it == blurbs.end() ? "" : it->second);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  json cfg = json::object();
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    if (alpha || beta) {
      if (cfg.contains("physical")) throw ConfigError("--alpha/--beta conflict with the physical block");
      if (alpha) cfg["normalized"]["alpha"] = *alpha;
      if (beta) cfg["normalized"]["beta"] = *beta;
    }
    for (const auto& [k, v] : phys_flags) {
      if (!v) continue;
      if (cfg.contains("normalized")) throw ConfigError("physical flags conflict with the normalized block");
      cfg["physical"][k] = *v;
    }
    if (p0 || u0) {
      if (p0) cfg["initial"]["p"] = *p0;
      if (u0) cfg["initial"]["u"] = *u0;
    }
    if (tau0 || v0) {
      if (tau0) cfg["initial"]["tau0_seconds"] = *tau0;
      if (v0) cfg["initial"]["v0_volts"] = *v0;
    }
    if (!format.empty()) cfg["format"] = format;
    if (period) cfg["options"]["period"] = *period;
    if (steps) cfg["options"]["max_steps"] = *steps;
    if (eta) cfg["options"]["eta"] = *eta;
    if (seed) cfg["options"]["seed"] = *seed;
    for (const auto& pair : opt_pairs) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--opt expects KEY=VALUE, got '" + pair + "'");
      cfg["options"][pair.substr(0, eq)] = parse_value(pair.substr(eq + 1));
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }

  if (threads) {
    if (*threads < 1) {
      err << "error: --threads must be >= 1\n";
      return kValidationError;
    }
    omp_set_num_threads(*threads);
  }

  if (output.empty()) return run(command, cfg, out, err);
  std::ofstream file(output);
  if (!file) {
    err << "error: cannot write " << output << '\n';
    return kValidationError;
  }
  return run(command, cfg, file, err);
}

}  // namespace cppll::cli
