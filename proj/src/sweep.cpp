#include "cppll/sweep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "cppll/cycles.hpp"
#include "cppll/stability.hpp"
#include "sweep_detail.hpp"

namespace cppll::sweep {

namespace {

double dist(const DiscreteState& a, const DiscreteState& b) {
  return std::max(std::abs(a.p - b.p), std::abs(a.u - b.u));
}

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr std::size_t kHistory = 64;

}  // namespace

double Axis::value(std::size_t i) const {
  if (count <= 1) return min;
  return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

void Axis::validate(const char* name) const {
  if (count < 1) throw std::invalid_argument(std::string(name) + ": count must be >= 1");
  if (!std::isfinite(min) || !std::isfinite(max)) throw std::invalid_argument(std::string(name) + ": non-finite bound");
  if (count > 1 && !(max > min)) throw std::invalid_argument(std::string(name) + ": need max > min");
}

std::string_view to_string(StateClass c) {
  switch (c) {
    case StateClass::Locked: return "Locked";
    case StateClass::Cycle: return "Cycle";
    case StateClass::Overload: return "Overload";
    case StateClass::Diverged: return "Diverged";
    case StateClass::Undecided: return "Undecided";
  }
  return "?";
}

std::string_view to_string(FirstStep f) {
  switch (f) {
    case FirstStep::QuadPos: return "QuadPos";
    case FirstStep::FracPos: return "FracPos";
    case FirstStep::LinNeg: return "LinNeg";
    case FirstStep::QuadNeg: return "QuadNeg";
    case FirstStep::Overload: return "Overload";
  }
  return "?";
}

std::string_view to_string(ParamClass c) {
  switch (c) {
    case ParamClass::Stable: return "Stable";
    case ParamClass::CycleRegion: return "CycleRegion";
    case ParamClass::Unstable: return "Unstable";
    case ParamClass::OverloadAtLock: return "OverloadAtLock";
  }
  return "?";
}

std::string_view to_string(OverloadPolicy p) {
  return p == OverloadPolicy::Exclude ? "exclude" : "count-as-failure";
}

FirstStep first_step(const DiscreteState& s0, const NormalizedParameters& np) {
  if (!(s0.u > -1.0)) return FirstStep::Overload;
  const StepResult r = step(s0, np);
  if (!r.next || r.overload != OverloadStatus::None) return FirstStep::Overload;
  return static_cast<FirstStep>(static_cast<int>(r.branch));
}

StateCell classify_state(const DiscreteState& s0, const NormalizedParameters& np, const BasinOptions& o) {
  if (o.max_cycle_period < 1 || o.max_cycle_period > kHistory / 2) {
    throw std::invalid_argument("max_cycle_period must lie in [1, 32]");
  }
  if (o.lock_window < 1 || o.cycle_check_every < 1) throw std::invalid_argument("bad basin options");
  StateCell cell;
  cell.first = first_step(s0, np);
  if (!(s0.u > -1.0) ||
      overload_pre({s0.p, s0.u - 2.0 * np.beta * s0.p}, np, s0.p) != OverloadStatus::None) {
    cell.cls = StateClass::Overload;
    return cell;
  }

  std::array<DiscreteState, kHistory> hist;
  hist[0] = s0;
  DiscreteState x = s0;
  std::size_t in_lock = 0;
  const std::size_t pmax = o.max_cycle_period;
  for (std::size_t k = 1; k <= o.max_steps; ++k) {
    cell.steps = static_cast<std::uint32_t>(k);
    StepResult r;
    try {
      r = step(x, np);
    } catch (const InvalidStateError&) {
      cell.cls = StateClass::Overload;
      return cell;
    }
    if (!r.next || r.overload != OverloadStatus::None) {
      cell.cls = StateClass::Overload;
      return cell;
    }
    x = *r.next;
    if (!std::isfinite(x.p) || !std::isfinite(x.u) || std::abs(x.u) > o.divergence_bound ||
        std::abs(x.p) > o.divergence_bound) {
      cell.cls = StateClass::Diverged;
      return cell;
    }
    hist[k % kHistory] = x;

    if (std::max(std::abs(x.p), std::abs(x.u)) < o.lock_tolerance) {
      if (++in_lock >= o.lock_window) {
        cell.cls = StateClass::Locked;
        return cell;
      }
    } else {
      in_lock = 0;
    }

    if (k % o.cycle_check_every == 0 && k >= kHistory) {
      for (std::size_t n = 1; n <= pmax; ++n) {
        bool closed = true;
        double reach = 0.0;
        for (std::size_t i = 0; i < n && closed; ++i) {
          const DiscreteState& a = hist[(k - i) % kHistory];
          closed = dist(a, hist[(k - i - n) % kHistory]) < o.cycle_tolerance;
          reach = std::max(reach, std::max(std::abs(a.p), std::abs(a.u)));
        }
        if (closed && reach >= o.origin_radius) {
          cell.cls = StateClass::Cycle;
          cell.period = static_cast<std::uint8_t>(n);
          return cell;
        }
      }
    }
  }
  cell.cls = StateClass::Undecided;
  return cell;
}

StateCounts BasinGrid::counts() const {
  StateCounts c;
  for (const StateCell& cell : cells) {
    switch (cell.cls) {
      case StateClass::Locked: ++c.locked; break;
      case StateClass::Cycle: ++c.cycle; break;
      case StateClass::Overload: ++c.overload; break;
      case StateClass::Diverged: ++c.diverged; break;
      case StateClass::Undecided: ++c.undecided; break;
    }
  }
  return c;
}

ParamCell classify_parameter_cell(const NormalizedParameters& np, const ParamOptions& opts) {
  ParamCell cell;
  for (const DiscreteState& s : opts.initial_set) {
    if (classify_state(s, np, opts.basin).cls == StateClass::Locked) ++cell.initial_locked;
  }
  switch (stability::classify_parameters(np)) {
    case stability::StabilityClass::OverloadAtLock:
      cell.cls = ParamClass::OverloadAtLock;
      return cell;
    case stability::StabilityClass::UnstableBeta:
    case stability::StabilityClass::Boundary:
      cell.cls = ParamClass::Unstable;
      return cell;
    case stability::StabilityClass::LocallyStable:
      break;
  }
  cell.period2 = cycles::period2(np).has_value();
  cell.period3 = cycles::period3(np).has_value();
  cell.cls = cell.period2 || cell.period3 ? ParamClass::CycleRegion : ParamClass::Stable;
  return cell;
}

std::pair<double, double> halton(std::uint64_t index) {
  return {radical_inverse(index, 2), radical_inverse(index, 3)};
}

std::vector<DiscreteState> pull_in_samples(const PullInOptions& opts) {
  if (!(opts.p_max > opts.p_min) || !(opts.u_max > opts.u_min) || !(opts.u_min > -1.0)) {
    throw std::invalid_argument("pull-in sample box must be nonempty with u > -1");
  }
  std::vector<DiscreteState> out;
  out.reserve(opts.samples);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const auto [h1, h2] = halton(opts.seed + i + 1);
    out.push_back({opts.p_min + (opts.p_max - opts.p_min) * h1, opts.u_min + (opts.u_max - opts.u_min) * h2});
  }
  return out;
}

BasinGrid basin_map(const NormalizedParameters& np, const Axis& p_axis, const Axis& u_axis,
                    const BasinOptions& opts) {
  np.validate();
  detail::check_basin_axes(p_axis, u_axis);
  BasinGrid g{np, p_axis, u_axis, opts, std::vector<StateCell>(p_axis.count * u_axis.count)};
  const long long n = static_cast<long long>(g.cells.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long idx = 0; idx < n; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / u_axis.count;
    const std::size_t j = static_cast<std::size_t>(idx) % u_axis.count;
    g.cells[static_cast<std::size_t>(idx)] = classify_state({p_axis.value(i), u_axis.value(j)}, np, opts);
  }
  return g;
}

ParamGrid param_map(const Axis& alpha_axis, const Axis& beta_axis, const ParamOptions& opts) {
  detail::check_param_axes(alpha_axis, beta_axis);
  ParamGrid g{alpha_axis, beta_axis, opts.initial_set.size(),
              std::vector<ParamCell>(alpha_axis.count * beta_axis.count)};
  const long long n = static_cast<long long>(g.cells.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long long idx = 0; idx < n; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / beta_axis.count;
    const std::size_t j = static_cast<std::size_t>(idx) % beta_axis.count;
    g.cells[static_cast<std::size_t>(idx)] =
        classify_parameter_cell({alpha_axis.value(i), beta_axis.value(j)}, opts);
  }
  return g;
}

PullInProbe probe_pull_in(const PhysicalParameters& base, double t_ref, const PullInOptions& opts,
                          const std::vector<DiscreteState>& samples) {
  if (opts.chunk < 1) throw std::invalid_argument("chunk must be >= 1");
  PullInProbe pr;
  pr.t_ref_seconds = t_ref;
  pr.np = normalize(detail::with_period(base, t_ref));
  std::vector<StateCell> buf(opts.chunk);
  for (std::size_t start = 0; start < samples.size(); start += opts.chunk) {
    const std::size_t len = std::min(opts.chunk, samples.size() - start);
    const long long nl = static_cast<long long>(len);
#pragma omp parallel for schedule(dynamic, 4)
    for (long long i = 0; i < nl; ++i) {
      buf[static_cast<std::size_t>(i)] =
          classify_state(samples[start + static_cast<std::size_t>(i)], pr.np, opts.basin);
    }
    for (std::size_t i = 0; i < len; ++i) {
      if (!detail::tally(pr, samples[start + i], buf[i], opts.overload)) return pr;
    }
  }
  pr.all_locked = true;
  return pr;
}

PullInResult empirical_pull_in(const PhysicalParameters& base, double t_min, double t_max,
                               const PullInOptions& opts) {
  return detail::bisect_pull_in(base, t_min, t_max, opts,
                                [](const PhysicalParameters& b, double t, const PullInOptions& o,
                                   const std::vector<DiscreteState>& s) { return sweep::probe_pull_in(b, t, o, s); });
}

}  // namespace cppll::sweep
