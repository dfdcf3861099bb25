// Grid computations: basins of initial states, parameter-plane stability
// labels and the sampled pull-in estimate. The functions in this namespace
// run over cells with OpenMP; cppll::sweep::serial holds the plain-loop
// reference versions. Both produce identical results for the same inputs.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cppll/model.hpp"

namespace cppll::sweep {

/// `count` evenly spaced values from min to max inclusive (count == 1
/// gives min only).
struct Axis {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;

  double value(std::size_t i) const;
  void validate(const char* name) const;
};

enum class StateClass : std::uint8_t { Locked, Cycle, Overload, Diverged, Undecided };
std::string_view to_string(StateClass c);

/// Colour class of the first step: the branch taken, or Overload.
enum class FirstStep : std::uint8_t { QuadPos, FracPos, LinNeg, QuadNeg, Overload };
std::string_view to_string(FirstStep f);

struct StateCell {
  StateClass cls = StateClass::Undecided;
  std::uint8_t period = 0;  // > 0 only for Cycle
  FirstStep first = FirstStep::Overload;
  std::uint32_t steps = 0;  // steps taken before the decision

  friend bool operator==(const StateCell&, const StateCell&) = default;
};

struct BasinOptions {
  std::size_t max_steps = 10000;
  double lock_tolerance = 1e-9;
  std::size_t lock_window = 8;
  std::size_t max_cycle_period = 32;
  double cycle_tolerance = 1e-9;
  double origin_radius = 1e-6;  // orbits closer than this to (0,0) are never called cycles
  double divergence_bound = 1e6;
  std::size_t cycle_check_every = 32;
};

/// Fate of one initial state.
StateCell classify_state(const DiscreteState& s0, const NormalizedParameters& np,
                         const BasinOptions& opts = {});

/// Branch taken by the first step, or Overload.
FirstStep first_step(const DiscreteState& s0, const NormalizedParameters& np);

struct StateCounts {
  std::size_t locked = 0, cycle = 0, overload = 0, diverged = 0, undecided = 0;
};

/// Cells in row-major order: index = i_p * u_axis.count + i_u.
struct BasinGrid {
  NormalizedParameters np;
  Axis p_axis;
  Axis u_axis;
  BasinOptions opts;
  std::vector<StateCell> cells;

  const StateCell& at(std::size_t i_p, std::size_t i_u) const { return cells[i_p * u_axis.count + i_u]; }
  StateCounts counts() const;
};

enum class ParamClass : std::uint8_t { Stable, CycleRegion, Unstable, OverloadAtLock };
std::string_view to_string(ParamClass c);

struct ParamCell {
  ParamClass cls = ParamClass::Stable;
  bool period2 = false;  // closed-form period-2 orbit realized
  bool period3 = false;  // closed-form period-3 orbit realized
  std::uint32_t initial_locked = 0;  // members of the initial set that lock

  friend bool operator==(const ParamCell&, const ParamCell&) = default;
};

struct ParamOptions {
  std::vector<DiscreteState> initial_set;  // optional, iterated per cell
  BasinOptions basin;
};

/// Cells in row-major order: index = i_alpha * beta_axis.count + i_beta.
struct ParamGrid {
  Axis alpha_axis;
  Axis beta_axis;
  std::size_t initial_set_size = 0;
  std::vector<ParamCell> cells;

  const ParamCell& at(std::size_t i_a, std::size_t i_b) const { return cells[i_a * beta_axis.count + i_b]; }
};

/// OverloadAtLock if alpha >= 1, Unstable if beta >= 2, CycleRegion if a
/// closed-form period-2 or period-3 orbit exists without overload,
/// otherwise Stable.
ParamCell classify_parameter_cell(const NormalizedParameters& np, const ParamOptions& opts = {});

/// Point `index` (1-based) of the 2-D Halton sequence in bases 2 and 3.
std::pair<double, double> halton(std::uint64_t index);

enum class OverloadPolicy { Exclude, CountAsFailure };
std::string_view to_string(OverloadPolicy p);

struct PullInOptions {
  std::size_t samples = 4096;
  double p_min = -1.0, p_max = 1.0;  // open box
  double u_min = -0.9, u_max = 3.0;
  std::uint64_t seed = 0;             // offset into the Halton sequence
  BasinOptions basin = {100000, 1e-9, 8, 32, 1e-9, 1e-6, 1e6, 32};
  OverloadPolicy overload = OverloadPolicy::Exclude;
  std::size_t scan_points = 32;       // evenly spaced T_ref values scanned before bisection
  bool check_monotonicity = true;     // keep scanning after the first failure
  double rel_tol = 1e-6;              // bisection stops when (hi - lo) <= rel_tol * hi
  std::size_t chunk = 256;            // samples evaluated between early-exit checks
};

/// Initial states of the pull-in sample, in evaluation order.
std::vector<DiscreteState> pull_in_samples(const PullInOptions& opts);

/// Outcome at one tested reference period. Samples are scanned in order and
/// the scan stops at the first failure, so counts cover the scanned prefix.
struct PullInProbe {
  double t_ref_seconds = 0.0;
  NormalizedParameters np;
  bool all_locked = false;
  std::size_t scanned = 0, locked = 0, overloaded = 0;
  std::optional<DiscreteState> first_failure;
  std::optional<StateCell> failure_cell;

  friend bool operator==(const PullInProbe&, const PullInProbe&) = default;
};

struct PullInResult {
  std::optional<double> estimate_seconds;  // empty when nothing in range locks
  std::optional<double> failing_t_ref_seconds;  // first failing T_ref, tightened by bisection
  std::optional<DiscreteState> first_failure;   // its first failing sample
  std::vector<PullInProbe> probes;              // in the order tested
  std::vector<std::string> findings;            // passing T_ref above a failing one
};

/// Sampled pull-in estimate: scans T_ref upward from t_min to the first
/// value where some sample fails to lock, then bisects between it and the
/// last passing value. The estimate is the largest T_ref known to pass with
/// every smaller scanned value passing too. Physical parameters other than
/// T_ref come from `base`.
PullInResult empirical_pull_in(const PhysicalParameters& base, double t_min, double t_max,
                               const PullInOptions& opts = {});

PullInProbe probe_pull_in(const PhysicalParameters& base, double t_ref, const PullInOptions& opts,
                          const std::vector<DiscreteState>& samples);

BasinGrid basin_map(const NormalizedParameters& np, const Axis& p_axis, const Axis& u_axis,
                    const BasinOptions& opts = {});
ParamGrid param_map(const Axis& alpha_axis, const Axis& beta_axis, const ParamOptions& opts = {});

namespace serial {

BasinGrid basin_map(const NormalizedParameters& np, const Axis& p_axis, const Axis& u_axis,
                    const BasinOptions& opts = {});
ParamGrid param_map(const Axis& alpha_axis, const Axis& beta_axis, const ParamOptions& opts = {});
PullInProbe probe_pull_in(const PhysicalParameters& base, double t_ref, const PullInOptions& opts,
                          const std::vector<DiscreteState>& samples);
PullInResult empirical_pull_in(const PhysicalParameters& base, double t_min, double t_max,
                               const PullInOptions& opts = {});

}  // namespace serial

}  // namespace cppll::sweep
