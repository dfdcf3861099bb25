#include "cppll/model.hpp"

#include <cmath>
#include <limits>

namespace cppll {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw std::domain_error(std::string(name) + " must be finite and positive");
  }
}

// Smallest nonnegative root of beta*s^2 + b*s + c0 = 0 for b > 0, written
// as -2c0 / (b + sqrt(disc)) so that small roots keep full precision.
std::optional<double> small_root(double beta, double b, double c0) {
  const double disc = b * b - 4.0 * beta * c0;
  if (!(disc >= 0.0)) return std::nullopt;
  const double denom = b + std::sqrt(disc);
  if (!(denom > 0.0)) return std::nullopt;
  return -2.0 * c0 / denom;
}

void check_state(const DiscreteState& s) {
  if (!(s.u > -1.0) || !std::isfinite(s.p)) {
    throw InvalidStateError("state has u <= -1 (non-positive VCO frequency)");
  }
}

}  // namespace

void PhysicalParameters::validate() const {
  require_positive(resistance_ohms, "resistance_ohms");
  require_positive(capacitance_farads, "capacitance_farads");
  require_positive(vco_gain_hz_per_volt, "vco_gain_hz_per_volt");
  require_positive(pump_current_amps, "pump_current_amps");
  require_positive(ref_period_seconds, "ref_period_seconds");
  require_positive(vco_free_hz, "vco_free_hz");
}

void NormalizedParameters::validate() const {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
}

std::string_view to_string(BranchId b) {
  switch (b) {
    case BranchId::QuadPos: return "QuadPos";
    case BranchId::FracPos: return "FracPos";
    case BranchId::LinNeg: return "LinNeg";
    case BranchId::QuadNeg: return "QuadNeg";
  }
  return "?";
}

std::optional<BranchId> branch_from_string(std::string_view s) {
  for (auto b : {BranchId::QuadPos, BranchId::FracPos, BranchId::LinNeg, BranchId::QuadNeg}) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

std::string_view to_string(OverloadStatus s) {
  switch (s) {
    case OverloadStatus::None: return "None";
    case OverloadStatus::NegativePulse: return "NegativePulse";
    case OverloadStatus::PositivePulse: return "PositivePulse";
    case OverloadStatus::InvalidDiscriminant: return "InvalidDiscriminant";
  }
  return "?";
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Locked: return "Locked";
    case Termination::Overloaded: return "Overloaded";
    case Termination::MaxSteps: return "MaxSteps";
    case Termination::Diverged: return "Diverged";
  }
  return "?";
}

double mod1(double x) {
  double r = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.
  if (r >= 1.0) r = 0.0;
  return r;
}

NormalizedParameters normalize(const PhysicalParameters& phys) {
  phys.validate();
  const double k_i = phys.vco_gain_hz_per_volt * phys.pump_current_amps;
  const double t = phys.ref_period_seconds;
  return {k_i * t * phys.resistance_ohms, k_i * t * t / (2.0 * phys.capacitance_farads)};
}

BranchId select_branch(const DiscreteState& s, const NormalizedParameters& np,
                       StepIntermediates* out) {
  StepIntermediates im{kNaN, kNaN, kNaN, kNaN, kNaN, kNaN};
  BranchId branch;
  if (s.p >= 0.0) {
    im.p_mod = mod1(s.p);
    im.c = (1.0 - im.p_mod) * (s.u + 1.0) - 1.0;
    branch = im.c <= 0.0 ? BranchId::QuadPos : BranchId::FracPos;
  } else {
    im.s_l = -(s.u - np.alpha + 1.0) * s.p + np.beta * s.p * s.p;  // S_{l_k}
    im.s_l_mod = mod1(im.s_l);
    im.l = (1.0 - im.s_l_mod) / (s.u + 1.0);
    im.d = im.s_l_mod + s.u;
    branch = im.l <= 1.0 ? BranchId::LinNeg : BranchId::QuadNeg;
  }
  if (out) *out = im;
  return branch;
}

namespace {

double s_l_value(const DiscreteState& s, const NormalizedParameters& np) {
  return -(s.u - np.alpha + 1.0) * s.p + np.beta * s.p * s.p;
}

// Pulse width produced by a chart; nullopt for a negative discriminant.
std::optional<double> chart_pulse(const BranchChart& ch, const DiscreteState& s,
                                  const NormalizedParameters& np) {
  const double b = s.u + np.alpha + 1.0;
  switch (ch.branch) {
    case BranchId::QuadPos: {
      const double c = (1.0 - (s.p - ch.p_floor)) * (s.u + 1.0) - 1.0;
      return small_root(np.beta, b, c);
    }
    case BranchId::FracPos:
      return 1.0 / (s.u + 1.0) - 1.0 + (s.p - ch.p_floor);
    case BranchId::LinNeg:
      return (1.0 - (s_l_value(s, np) - ch.s_floor)) / (s.u + 1.0) - 1.0;
    case BranchId::QuadNeg:
      return small_root(np.beta, b, (s_l_value(s, np) - ch.s_floor) + s.u);
  }
  return std::nullopt;
}

BranchChart own_chart(BranchId branch, const DiscreteState& s, const NormalizedParameters& np) {
  BranchChart ch{branch, 0.0, 0.0};
  if (branch == BranchId::QuadPos || branch == BranchId::FracPos) {
    ch.p_floor = s.p - mod1(s.p);
  } else {
    const double sl = s_l_value(s, np);
    ch.s_floor = sl - mod1(sl);
  }
  return ch;
}

}  // namespace

BranchChart chart_at(const DiscreteState& s, const NormalizedParameters& np) {
  return own_chart(select_branch(s, np), s, np);
}

OverloadStatus overload_pre(const DiscreteState& s, const NormalizedParameters& np,
                            double pulse) {
  if (pulse < 0.0) {
    return (s.u + 1.0) + 2.0 * np.beta * pulse - np.alpha <= 0.0 ? OverloadStatus::NegativePulse
                                                                 : OverloadStatus::None;
  }
  return s.u <= -1.0 ? OverloadStatus::PositivePulse : OverloadStatus::None;
}

StepResult step(const DiscreteState& s, const NormalizedParameters& np) {
  check_state(s);
  StepResult r;
  r.branch = select_branch(s, np, &r.intermediates);
  const auto pulse = chart_pulse(own_chart(r.branch, s, np), s, np);
  if (!pulse) {
    r.overload = OverloadStatus::InvalidDiscriminant;
    return r;
  }
  r.next = DiscreteState{*pulse, s.u + 2.0 * np.beta * *pulse};
  r.overload = overload_pre(s, np, *pulse);
  return r;
}

std::optional<DiscreteState> apply_chart(const BranchChart& chart, const DiscreteState& s,
                                         const NormalizedParameters& np) {
  if (!(s.u > -1.0)) return std::nullopt;
  const auto pulse = chart_pulse(chart, s, np);
  if (!pulse) return std::nullopt;
  return DiscreteState{*pulse, s.u + 2.0 * np.beta * *pulse};
}

std::array<double, 4> chart_jacobian(const BranchChart& chart, const DiscreteState& s,
                                     const NormalizedParameters& np) {
  if (!(s.u > -1.0)) throw std::domain_error("chart_jacobian: u <= -1");
  const auto pulse = chart_pulse(chart, s, np);
  if (!pulse) throw std::domain_error("chart_jacobian: negative discriminant");
  const double root = *pulse;
  const double w = s.u + 1.0;
  const double b = w + np.alpha;
  double dp = 0.0;
  double du = 0.0;
  switch (chart.branch) {
    case BranchId::FracPos:
      dp = 1.0;
      du = -1.0 / (w * w);
      break;
    case BranchId::QuadPos: {
      const double pm = s.p - chart.p_floor;
      const double den = 2.0 * np.beta * root + b;
      dp = w / den;
      du = -(root + (1.0 - pm)) / den;
      break;
    }
    case BranchId::LinNeg:
    case BranchId::QuadNeg: {
      const double sl_p = -(s.u - np.alpha + 1.0) + 2.0 * np.beta * s.p;
      const double sl_u = -s.p;
      if (chart.branch == BranchId::LinNeg) {
        const double slm = s_l_value(s, np) - chart.s_floor;
        dp = -sl_p / w;
        du = -sl_u / w - (1.0 - slm) / (w * w);
      } else {
        const double den = 2.0 * np.beta * root + b;
        dp = -sl_p / den;
        du = -(root + sl_u + 1.0) / den;
      }
      break;
    }
  }
  const double k = 2.0 * np.beta;
  return {dp, du, k * dp, 1.0 + k * du};
}

std::optional<DiscreteState> apply_branch(BranchId branch, const DiscreteState& s,
                                          const NormalizedParameters& np) {
  return apply_chart(own_chart(branch, s, np), s, np);
}

std::array<double, 4> branch_jacobian(BranchId branch, const DiscreteState& s,
                                      const NormalizedParameters& np) {
  return chart_jacobian(own_chart(branch, s, np), s, np);
}

Trajectory iterate(const DiscreteState& s0, const NormalizedParameters& np,
                   const IterateOptions& opts) {
  if (opts.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(opts.lock_tolerance > 0.0)) throw std::invalid_argument("lock_tolerance must be > 0");
  check_state(s0);

  Trajectory tr;
  tr.states.push_back(s0);

  // The pulse that produced s0 entered with u = u0 - 2 beta p0.
  const auto initial =
      overload_pre({s0.p, s0.u - 2.0 * np.beta * s0.p}, np, s0.p);
  if (initial != OverloadStatus::None) {
    tr.termination = Termination::Overloaded;
    tr.overload = initial;
    return tr;
  }

  std::size_t in_lock = 0;
  DiscreteState cur = s0;
  for (std::size_t k = 0; k < opts.max_steps; ++k) {
    const StepResult r = step(cur, np);
    if (r.overload != OverloadStatus::None) {
      if (r.next) {
        tr.states.push_back(*r.next);
        tr.branches.push_back(r.branch);
      }
      tr.termination = Termination::Overloaded;
      tr.overload = r.overload;
      return tr;
    }
    cur = *r.next;
    tr.states.push_back(cur);
    tr.branches.push_back(r.branch);
    if (!std::isfinite(cur.p) || !std::isfinite(cur.u) ||
        std::abs(cur.u) > opts.divergence_bound) {
      tr.termination = Termination::Diverged;
      return tr;
    }
    if (std::max(std::abs(cur.p), std::abs(cur.u)) < opts.lock_tolerance) {
      if (++in_lock >= opts.lock_window) {
        tr.termination = Termination::Locked;
        return tr;
      }
    } else {
      in_lock = 0;
    }
  }
  tr.termination = Termination::MaxSteps;
  return tr;
}

bool local_overload(const NormalizedParameters& np) { return np.alpha >= 1.0; }

bool startup_overload(const NormalizedParameters& np) {
  return 1.0 - 2.0 * np.beta - np.alpha <= 0.0;
}

double local_overload_threshold(const PhysicalParameters& phys) {
  phys.validate();
  return 1.0 / (phys.vco_gain_hz_per_volt * phys.pump_current_amps * phys.resistance_ohms);
}

double startup_overload_threshold(const PhysicalParameters& phys) {
  phys.validate();
  const double rc = phys.resistance_ohms * phys.capacitance_farads;
  const double q = phys.capacitance_farads / (phys.vco_gain_hz_per_volt * phys.pump_current_amps);
  // Same root as (-rc + sqrt(rc^2 + 4q)) / 2 without cancellation.
  return 2.0 * q / (rc + std::sqrt(rc * rc + 4.0 * q));
}

}  // namespace cppll
