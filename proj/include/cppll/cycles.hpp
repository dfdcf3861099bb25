// Periodic orbits of the pulse map: closed-form period-2 and period-3
// cycles, a grid + Newton search for other periods, and stability
// classification from multipliers and perturbation.
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "cppll/model.hpp"

namespace cppll::cycles {

enum class CycleStability { Stable, Unstable, Neutral };
std::string_view to_string(CycleStability s);

struct Cycle {
  std::size_t period = 0;
  std::vector<DiscreteState> points;
  std::vector<BranchId> itinerary;  // branch taken at each point
  CycleStability stability = CycleStability::Neutral;
  std::vector<std::complex<double>> multipliers;
  // Some point sits on a branch boundary (p = 0, c = 0, l = 1 or a mod-1
  // wrap), so the multipliers are one-sided and the perturbation test
  // decides stability.
  bool touches_boundary = false;
  bool classified = false;
  std::optional<CycleStability> perturbation;  // result of the perturbation test
};

/// Closed-form period-2 orbit; exists for beta > 2 only. Returns nullopt
/// when p0 <= 0 or the orbit does not close / overloads under step() at the
/// given alpha.
std::optional<Cycle> period2(const NormalizedParameters& np);
/// p0 of the closed-form period-2 orbit (may be <= 0 or NaN).
double period2_p0(double beta);

/// Closed-form period-3 orbit through p = 0; exists for beta > 3/2. Returns
/// nullopt when u0 <= 0 or the itinerary is not realized without overload.
std::optional<Cycle> period3(const NormalizedParameters& np);
/// u0 of the closed-form period-3 orbit (NaN for beta < 3/2).
double period3_u0(double beta);

/// Max-norm closure defect of a cycle under step(); +inf if a step overloads.
double closure_error(const Cycle& c, const NormalizedParameters& np);

struct SearchBox {
  double p_min = -0.9, p_max = 0.9;
  double u_min = -0.9, u_max = 3.0;
  std::size_t p_count = 200, u_count = 200;
};

struct FindOptions {
  SearchBox box;
  double displacement_tol = 0.05;  // seed kept if |step^n(x) - x| below this
  std::size_t newton_max_iter = 60;
  double newton_tol = 1e-13;
  double closure_tol = 1e-10;
  double dedupe_tol = 1e-8;
  bool classify = true;
};

struct FindResult {
  std::vector<Cycle> cycles;  // deduplicated, ordered by canonical point
  std::size_t seeds = 0;
  std::size_t candidates = 0;         // seeds under the displacement threshold
  std::size_t newton_failures = 0;    // dropped: no convergence
  std::size_t rejected = 0;           // dropped: overload, bad closure or smaller period
};

/// Grid search for prime-period cycles. Parallel over seeds; the result
/// does not depend on the thread count.
FindResult find_cycles(const NormalizedParameters& np, std::size_t period,
                       const FindOptions& opts = {});

/// Rotates the points so the lexicographically smallest one comes first.
Cycle canonical(const Cycle& c);
/// True if the two cycles are rotations of each other within `tol`.
bool same_orbit(const Cycle& a, const Cycle& b, double tol);

struct ClassifyOptions {
  double multiplier_margin = 1e-6;
  double epsilon = 1e-4;
  std::size_t max_steps = 20000;
  double boundary_tol = 1e-9;
};

/// Product of the branch Jacobians around the cycle (first point first).
std::array<double, 4> monodromy(const Cycle& c, const NormalizedParameters& np);

/// Perturbation oracle: kicks the first point by epsilon in 8 directions
/// and iterates. Stable if every kick returns to within 1e-3 * epsilon of
/// the orbit, Unstable if one leaves a 100 * epsilon neighbourhood (or
/// overloads), Neutral otherwise.
CycleStability perturbation_stability(const Cycle& c, const NormalizedParameters& np,
                                      const ClassifyOptions& opts = {});

/// Fills multipliers, stability, touches_boundary and perturbation.
Cycle classify_cycle(const Cycle& c, const NormalizedParameters& np,
                     const ClassifyOptions& opts = {});

}  // namespace cppll::cycles
