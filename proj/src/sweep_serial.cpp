// Plain-loop versions of the sweeps, kept as the reference the OpenMP
// versions are tested and benchmarked against.
#include "cppll/sweep.hpp"

#include "sweep_detail.hpp"

namespace cppll::sweep::serial {

BasinGrid basin_map(const NormalizedParameters& np, const Axis& p_axis, const Axis& u_axis,
                    const BasinOptions& opts) {
  np.validate();
  detail::check_basin_axes(p_axis, u_axis);
  BasinGrid g{np, p_axis, u_axis, opts, {}};
  g.cells.reserve(p_axis.count * u_axis.count);
  for (std::size_t i = 0; i < p_axis.count; ++i) {
    for (std::size_t j = 0; j < u_axis.count; ++j) {
      g.cells.push_back(classify_state({p_axis.value(i), u_axis.value(j)}, np, opts));
    }
  }
  return g;
}

ParamGrid param_map(const Axis& alpha_axis, const Axis& beta_axis, const ParamOptions& opts) {
  detail::check_param_axes(alpha_axis, beta_axis);
  ParamGrid g{alpha_axis, beta_axis, opts.initial_set.size(), {}};
  g.cells.reserve(alpha_axis.count * beta_axis.count);
  for (std::size_t i = 0; i < alpha_axis.count; ++i) {
    for (std::size_t j = 0; j < beta_axis.count; ++j) {
      g.cells.push_back(classify_parameter_cell({alpha_axis.value(i), beta_axis.value(j)}, opts));
    }
  }
  return g;
}

PullInProbe probe_pull_in(const PhysicalParameters& base, double t_ref, const PullInOptions& opts,
                          const std::vector<DiscreteState>& samples) {
  PullInProbe pr;
  pr.t_ref_seconds = t_ref;
  pr.np = normalize(detail::with_period(base, t_ref));
  for (const DiscreteState& s : samples) {
    if (!detail::tally(pr, s, classify_state(s, pr.np, opts.basin), opts.overload)) return pr;
  }
  pr.all_locked = true;
  return pr;
}

PullInResult empirical_pull_in(const PhysicalParameters& base, double t_min, double t_max,
                               const PullInOptions& opts) {
  return detail::bisect_pull_in(base, t_min, t_max, opts,
                                [](const PhysicalParameters& b, double t, const PullInOptions& o,
                                   const std::vector<DiscreteState>& s) { return serial::probe_pull_in(b, t, o, s); });
}

}  // namespace cppll::sweep::serial
