// Discrete-time charge-pump PLL model: parameters, normalization, the
// four-branch pulse map and the VCO overload predicates.
#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cppll {

/// Circuit constants of a CP-PLL with an ideal PI loop filter R + 1/(Cs).
/// Frequencies are in Hz (cycles per second), phases in cycles.
struct PhysicalParameters {
  double resistance_ohms = 0.0;
  double capacitance_farads = 0.0;
  double vco_gain_hz_per_volt = 0.0;
  double pump_current_amps = 0.0;
  double ref_period_seconds = 0.0;
  double vco_free_hz = 0.0;

  /// Throws std::domain_error unless every field is finite and > 0.
  void validate() const;
};

struct NormalizedParameters {
  double alpha = 0.0;  // K_vco * I_p * T_ref * R
  double beta = 0.0;   // K_vco * I_p * T_ref^2 / (2C)

  void validate() const;
  friend bool operator==(const NormalizedParameters&, const NormalizedParameters&) = default;
};

/// Normalized pulse width p = tau / T_ref and frequency offset u, where
/// u + 1 is the VCO / reference frequency ratio on the zero-current segment.
struct DiscreteState {
  double p = 0.0;
  double u = 0.0;

  friend bool operator==(const DiscreteState&, const DiscreteState&) = default;
};

enum class BranchId {
  QuadPos,  // p >= 0, c <= 0: positive pulse, quadratic root in c
  FracPos,  // p >= 0, c > 0: negative pulse ended by the reference edge
  LinNeg,   // p < 0, l <= 1: negative pulse, linear in l
  QuadNeg,  // p < 0, l > 1: positive pulse, quadratic root in d
};

enum class OverloadStatus { None, NegativePulse, PositivePulse, InvalidDiscriminant };

std::string_view to_string(BranchId b);
std::string_view to_string(OverloadStatus s);
std::optional<BranchId> branch_from_string(std::string_view s);

/// Thrown when a state has u <= -1 (non-positive VCO frequency).
class InvalidStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Auxiliary quantities of one step. Only the ones used by the selected
/// side (p >= 0 or p < 0) are meaningful; the rest stay NaN.
struct StepIntermediates {
  double p_mod = 0.0;  // p mod 1
  double c = 0.0;
  double s_l = 0.0;     // S_{l_k}
  double s_l_mod = 0.0; // S_{l_k} mod 1
  double l = 0.0;
  double d = 0.0;
};

struct StepResult {
  std::optional<DiscreteState> next;
  BranchId branch = BranchId::FracPos;
  OverloadStatus overload = OverloadStatus::None;
  StepIntermediates intermediates;
};

enum class Termination { Locked, Overloaded, MaxSteps, Diverged };
std::string_view to_string(Termination t);

struct Trajectory {
  std::vector<DiscreteState> states;
  std::vector<BranchId> branches;
  Termination termination = Termination::MaxSteps;
  OverloadStatus overload = OverloadStatus::None;  // set when Overloaded
};

struct IterateOptions {
  std::size_t max_steps = 10000;
  double lock_tolerance = 1e-9;
  std::size_t lock_window = 8;
  double divergence_bound = 1e6;
};

/// Floor-based remainder in [0, 1), also for negative arguments.
double mod1(double x);

NormalizedParameters normalize(const PhysicalParameters& phys);

/// Branch selection and intermediates for a state, without computing the
/// root. Used by step() and by analyses that need the itinerary only.
BranchId select_branch(const DiscreteState& s, const NormalizedParameters& np,
                       StepIntermediates* out = nullptr);

/// One application of the map. Throws InvalidStateError for u <= -1.
StepResult step(const DiscreteState& s, const NormalizedParameters& np);

/// A branch together with the integer parts removed by the two mod
/// operations. Freezing the integer parts gives the smooth extension of a
/// branch formula across its boundaries.
struct BranchChart {
  BranchId branch = BranchId::FracPos;
  double p_floor = 0.0;  // floor(p), used by QuadPos/FracPos
  double s_floor = 0.0;  // floor(S_l), used by LinNeg/QuadNeg
};

/// Chart of the branch selected at `s`.
BranchChart chart_at(const DiscreteState& s, const NormalizedParameters& np);

/// Evaluates a chart regardless of whether its branch condition holds.
/// Returns nullopt on a negative discriminant or u <= -1.
std::optional<DiscreteState> apply_chart(const BranchChart& chart, const DiscreteState& s,
                                         const NormalizedParameters& np);

/// Analytic Jacobian d(p', u')/d(p, u) of a chart, row-major
/// {dp'/dp, dp'/du, du'/dp, du'/du}. Throws std::domain_error where the
/// chart is undefined.
std::array<double, 4> chart_jacobian(const BranchChart& chart, const DiscreteState& s,
                                     const NormalizedParameters& np);

/// apply_chart / chart_jacobian with the floors taken at `s` itself.
std::optional<DiscreteState> apply_branch(BranchId branch, const DiscreteState& s,
                                          const NormalizedParameters& np);
std::array<double, 4> branch_jacobian(BranchId branch, const DiscreteState& s,
                                      const NormalizedParameters& np);

Trajectory iterate(const DiscreteState& s0, const NormalizedParameters& np,
                   const IterateOptions& opts = {});

/// Overload test for a pulse of signed width `pulse` (normalized) entering
/// with frequency offset `s.u`. A negative pulse overloads iff
/// (u + 1) + 2*beta*pulse - alpha <= 0; a positive pulse iff u <= -1.
OverloadStatus overload_pre(const DiscreteState& s, const NormalizedParameters& np,
                            double pulse);

/// Local overload near lock happens iff alpha >= 1.
bool local_overload(const NormalizedParameters& np);
/// Worst-case startup overload (pulse of -T_ref at equal frequencies)
/// happens iff 1 - 2*beta - alpha <= 0.
bool startup_overload(const NormalizedParameters& np);

/// 1 / (K_vco I_p R): the largest T_ref free of local overload.
double local_overload_threshold(const PhysicalParameters& phys);
/// Positive root T of alpha(T) + 2 beta(T) = 1.
double startup_overload_threshold(const PhysicalParameters& phys);

}  // namespace cppll
