// Pieces shared by the OpenMP and serial sweep implementations.
#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

#include "cppll/sweep.hpp"

namespace cppll::sweep::detail {

inline void check_basin_axes(const Axis& p_axis, const Axis& u_axis) {
  p_axis.validate("p axis");
  u_axis.validate("u axis");
  if (!(std::min(u_axis.min, u_axis.max) > -1.0)) throw std::invalid_argument("u axis must stay above -1");
}

inline void check_param_axes(const Axis& a, const Axis& b) {
  a.validate("alpha axis");
  b.validate("beta axis");
  if (!(std::min(a.min, a.max) > 0.0) || !(std::min(b.min, b.max) > 0.0)) {
    throw std::invalid_argument("parameter axes must be positive");
  }
}

inline PhysicalParameters with_period(PhysicalParameters phys, double t_ref) {
  phys.ref_period_seconds = t_ref;
  return phys;
}

// Folds one sample outcome into a probe. Returns false when the sample is a
// failure (the scan stops there).
inline bool tally(PullInProbe& pr, const DiscreteState& s, const StateCell& cell, OverloadPolicy policy) {
  ++pr.scanned;
  if (cell.cls == StateClass::Locked) {
    ++pr.locked;
    return true;
  }
  if (cell.cls == StateClass::Overload && policy == OverloadPolicy::Exclude) {
    ++pr.overloaded;
    return true;
  }
  pr.first_failure = s;
  pr.failure_cell = cell;
  return false;
}

template <class ProbeFn>
PullInResult bisect_pull_in(const PhysicalParameters& base, double t_min, double t_max,
                            const PullInOptions& opts, ProbeFn&& probe) {
  base.validate();
  if (!(t_min > 0.0 && t_max > t_min)) throw std::invalid_argument("need 0 < t_min < t_max");
  if (!(opts.rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (opts.scan_points < 2) throw std::invalid_argument("scan_points must be >= 2");
  const auto samples = pull_in_samples(opts);

  PullInResult res;
  auto run = [&](double t) -> const PullInProbe& {
    res.probes.push_back(probe(base, t, opts, samples));
    return res.probes.back();
  };

  // Ascending scan for the first failing T_ref, then bisection inside the
  // bracket. The scan continues past the first failure so that passing
  // values above it show up as monotonicity findings.
  const std::size_t n = opts.scan_points;
  std::optional<std::size_t> first_fail;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(n - 1);
    const PullInProbe& pr = run(t);
    if (!pr.all_locked && !first_fail) {
      first_fail = i;
      res.failing_t_ref_seconds = t;
      res.first_failure = pr.first_failure;
      if (!opts.check_monotonicity) break;
    }
  }
  if (!first_fail) {
    res.estimate_seconds = t_max;
  } else if (*first_fail > 0) {
    double lo = res.probes[*first_fail - 1].t_ref_seconds;
    double hi = *res.failing_t_ref_seconds;
    while (hi - lo > opts.rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      const PullInProbe& pr = run(mid);
      if (pr.all_locked) {
        lo = mid;
      } else {
        hi = mid;
        res.first_failure = pr.first_failure;
      }
    }
    res.estimate_seconds = lo;
    res.failing_t_ref_seconds = hi;
  }

  // Every tested T_ref below a passing one should pass as well.
  std::vector<const PullInProbe*> sorted;
  for (const auto& p : res.probes) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const PullInProbe* a, const PullInProbe* b) { return a->t_ref_seconds < b->t_ref_seconds; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!sorted[i]->all_locked) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (!sorted[j]->all_locked) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "non-monotone: all samples lock at T_ref=%.9g s but not at T_ref=%.9g s",
                      sorted[i]->t_ref_seconds, sorted[j]->t_ref_seconds);
        res.findings.emplace_back(buf);
        break;
      }
    }
  }
  return res;
}

}  // namespace cppll::sweep::detail
