#include "cppll/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace cppll::cycles {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist(const DiscreteState& a, const DiscreteState& b) {
  return std::max(std::abs(a.p - b.p), std::abs(a.u - b.u));
}

bool lex_less(const DiscreteState& a, const DiscreteState& b) {
  return a.p < b.p || (a.p == b.p && a.u < b.u);
}

// Walks the closed-form points with step(); fills the itinerary. Fails if
// a step overloads or misses the next point.
std::optional<Cycle> realize(std::vector<DiscreteState> pts, const NormalizedParameters& np) {
  Cycle c;
  c.period = pts.size();
  c.points = std::move(pts);
  for (std::size_t i = 0; i < c.period; ++i) {
    const DiscreteState& x = c.points[i];
    if (!(x.u > -1.0)) return std::nullopt;
    const StepResult r = step(x, np);
    if (!r.next || r.overload != OverloadStatus::None) return std::nullopt;
    if (dist(*r.next, c.points[(i + 1) % c.period]) > 1e-10) return std::nullopt;
    c.itinerary.push_back(r.branch);
  }
  return c;
}

std::array<double, 4> mat_mul(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

bool near_integer(double x, double tol) { return std::abs(x - std::round(x)) <= tol; }

bool on_boundary(const DiscreteState& s, const NormalizedParameters& np, double tol) {
  if (std::abs(s.p) <= tol) return true;
  StepIntermediates im;
  select_branch(s, np, &im);
  if (s.p >= 0.0) return near_integer(s.p, tol) || std::abs(im.c) <= tol;
  return near_integer(im.s_l, tol) || std::abs(im.l - 1.0) <= tol;
}

struct SeedOutcome {
  enum Kind { Skipped, NewtonFailed, Rejected, Found } kind = Skipped;
  Cycle cycle;
};

SeedOutcome refine_seed(DiscreteState x, const NormalizedParameters& np, std::size_t period,
                        const FindOptions& opts) {
  SeedOutcome out;
  std::vector<BranchChart> charts;
  charts.reserve(period);
  DiscreteState y = x;
  for (std::size_t k = 0; k < period; ++k) {
    const StepResult r = step(y, np);
    if (!r.next || r.overload != OverloadStatus::None || !(r.next->u > -1.0)) return out;
    charts.push_back(chart_at(y, np));
    y = *r.next;
  }
  if (dist(x, y) >= opts.displacement_tol) return out;

  // Newton on Phi(x) - x with the itinerary frozen.
  auto residual = [&](const DiscreteState& z, std::array<double, 4>* jac) -> std::optional<DiscreteState> {
    DiscreteState w = z;
    std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};
    for (const BranchChart& ch : charts) {
      if (jac) m = mat_mul(chart_jacobian(ch, w, np), m);
      const auto nxt = apply_chart(ch, w, np);
      if (!nxt) return std::nullopt;
      w = *nxt;
    }
    if (jac) *jac = m;
    return DiscreteState{w.p - z.p, w.u - z.u};
  };

  out.kind = SeedOutcome::NewtonFailed;
  bool converged = false;
  try {
    for (std::size_t it = 0; it < opts.newton_max_iter; ++it) {
      std::array<double, 4> m;
      const auto f = residual(x, &m);
      if (!f) return out;
      const double fn = std::max(std::abs(f->p), std::abs(f->u));
      if (fn <= opts.newton_tol) {
        converged = true;
        break;
      }
      const double a = m[0] - 1.0, b = m[1], c = m[2], d = m[3] - 1.0;
      const double det = a * d - b * c;
      if (det == 0.0 || !std::isfinite(det)) return out;
      const double dp = (d * f->p - b * f->u) / det;
      const double du = (a * f->u - c * f->p) / det;
      bool accepted = false;
      for (double lam = 1.0; lam >= 1.0 / 1024.0; lam /= 2.0) {
        const DiscreteState trial{x.p - lam * dp, x.u - lam * du};
        if (!(trial.u > -1.0)) continue;
        const auto ft = residual(trial, nullptr);
        if (ft && std::max(std::abs(ft->p), std::abs(ft->u)) < fn) {
          x = trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        converged = fn <= 100.0 * opts.newton_tol;
        break;
      }
    }
  } catch (const std::domain_error&) {
    return out;
  }
  if (!converged) return out;

  // Check against the real map.
  out.kind = SeedOutcome::Rejected;
  Cycle cyc;
  cyc.period = period;
  DiscreteState z = x;
  try {
    for (std::size_t k = 0; k < period; ++k) {
      const StepResult r = step(z, np);
      if (!r.next || r.overload != OverloadStatus::None) return out;
      cyc.points.push_back(z);
      cyc.itinerary.push_back(r.branch);
      z = *r.next;
    }
  } catch (const InvalidStateError&) {
    return out;
  }
  if (dist(z, x) > opts.closure_tol) return out;
  for (std::size_t d = 1; d < period; ++d) {
    if (period % d == 0 && dist(cyc.points[d], cyc.points[0]) <= opts.dedupe_tol) return out;
  }
  out.kind = SeedOutcome::Found;
  out.cycle = canonical(cyc);
  return out;
}

}  // namespace

std::string_view to_string(CycleStability s) {
  switch (s) {
    case CycleStability::Stable: return "Stable";
    case CycleStability::Unstable: return "Unstable";
    case CycleStability::Neutral: return "Neutral";
  }
  return "?";
}

double period2_p0(double beta) {
  return (-std::sqrt(beta) + std::sqrt(9.0 * beta - 16.0)) / (4.0 * std::sqrt(beta));
}

double period3_u0(double beta) {
  return (2.0 * beta - 3.0 + std::sqrt(2.0 * beta) * std::sqrt(2.0 * beta - 3.0)) / 3.0;
}

std::optional<Cycle> period2(const NormalizedParameters& np) {
  np.validate();
  const double p0 = period2_p0(np.beta);
  if (!(p0 > 0.0) || !(p0 < 0.5)) return std::nullopt;
  const double u0 = 2.0 * p0 / (1.0 - 2.0 * p0);
  const double p1 = -p0;
  const double u1 = u0 + 2.0 * np.beta * p1;
  return realize({{p0, u0}, {p1, u1}}, np);
}

std::optional<Cycle> period3(const NormalizedParameters& np) {
  np.validate();
  const double u0 = period3_u0(np.beta);
  if (!(u0 > 0.0)) return std::nullopt;
  const double p1 = -u0 / (u0 + 1.0);
  const double u1 = u0 - 2.0 * np.beta * u0 / (1.0 + u0);
  return realize({{0.0, u0}, {p1, u1}, {-p1, u0}}, np);
}

double closure_error(const Cycle& c, const NormalizedParameters& np) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.period; ++i) {
    const StepResult r = step(c.points[i], np);
    if (!r.next || r.overload != OverloadStatus::None) return kInf;
    worst = std::max(worst, dist(*r.next, c.points[(i + 1) % c.period]));
  }
  return worst;
}

Cycle canonical(const Cycle& c) {
  if (c.points.empty()) return c;
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    if (lex_less(c.points[i], c.points[best])) best = i;
  }
  Cycle out = c;
  std::rotate(out.points.begin(), out.points.begin() + static_cast<std::ptrdiff_t>(best), out.points.end());
  if (out.itinerary.size() == out.points.size()) {
    std::rotate(out.itinerary.begin(), out.itinerary.begin() + static_cast<std::ptrdiff_t>(best),
                out.itinerary.end());
  }
  return out;
}

bool same_orbit(const Cycle& a, const Cycle& b, double tol) {
  if (a.points.size() != b.points.size() || a.points.empty()) return false;
  const std::size_t n = a.points.size();
  for (std::size_t shift = 0; shift < n; ++shift) {
    bool all = true;
    for (std::size_t i = 0; i < n && all; ++i) {
      all = dist(a.points[i], b.points[(i + shift) % n]) <= tol;
    }
    if (all) return true;
  }
  return false;
}

FindResult find_cycles(const NormalizedParameters& np, std::size_t period, const FindOptions& opts) {
  np.validate();
  if (period < 1 || period > 32) throw std::invalid_argument("period must lie in [1, 32]");
  const SearchBox& box = opts.box;
  if (box.p_count < 2 || box.u_count < 2 || !(box.p_max > box.p_min) || !(box.u_max > box.u_min)) {
    throw std::invalid_argument("degenerate search box");
  }
  if (!(box.u_min > -1.0)) throw std::invalid_argument("search box must satisfy u > -1");

  const std::size_t n = box.p_count * box.u_count;
  std::vector<SeedOutcome> outcomes(n);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (long long idx = 0; idx < nn; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / box.u_count;
    const std::size_t j = static_cast<std::size_t>(idx) % box.u_count;
    const DiscreteState seed{
        box.p_min + (box.p_max - box.p_min) * static_cast<double>(i) / static_cast<double>(box.p_count - 1),
        box.u_min + (box.u_max - box.u_min) * static_cast<double>(j) / static_cast<double>(box.u_count - 1)};
    outcomes[static_cast<std::size_t>(idx)] = refine_seed(seed, np, period, opts);
  }

  FindResult res;
  res.seeds = n;
  for (const SeedOutcome& o : outcomes) {
    if (o.kind == SeedOutcome::Skipped) continue;
    ++res.candidates;
    if (o.kind == SeedOutcome::NewtonFailed) {
      ++res.newton_failures;
    } else if (o.kind == SeedOutcome::Rejected) {
      ++res.rejected;
    } else {
      const bool dup = std::any_of(res.cycles.begin(), res.cycles.end(),
                                   [&](const Cycle& c) { return same_orbit(c, o.cycle, opts.dedupe_tol); });
      if (!dup) res.cycles.push_back(o.cycle);
    }
  }
  std::sort(res.cycles.begin(), res.cycles.end(),
            [](const Cycle& a, const Cycle& b) { return lex_less(a.points[0], b.points[0]); });
  if (opts.classify) {
    for (Cycle& c : res.cycles) c = classify_cycle(c, np);
  }
  return res;
}

std::array<double, 4> monodromy(const Cycle& c, const NormalizedParameters& np) {
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};
  for (std::size_t i = 0; i < c.period; ++i) {
    m = mat_mul(chart_jacobian(chart_at(c.points[i], np), c.points[i], np), m);
  }
  return m;
}

CycleStability perturbation_stability(const Cycle& c, const NormalizedParameters& np,
                                      const ClassifyOptions& opts) {
  constexpr double kPi = 3.14159265358979323846;
  auto orbit_distance = [&](const DiscreteState& s) {
    double best = kInf;
    for (const DiscreteState& q : c.points) best = std::min(best, dist(s, q));
    return best;
  };
  bool all_back = true;
  for (int k = 0; k < 8; ++k) {
    const double t = 2.0 * kPi * k / 8.0;
    DiscreteState s{c.points[0].p + opts.epsilon * std::cos(t), c.points[0].u + opts.epsilon * std::sin(t)};
    bool back = false;
    try {
      for (std::size_t n = 0; n < opts.max_steps; ++n) {
        const StepResult r = step(s, np);
        if (!r.next || r.overload != OverloadStatus::None) return CycleStability::Unstable;
        s = *r.next;
        const double dd = orbit_distance(s);
        if (!std::isfinite(dd) || dd > 100.0 * opts.epsilon) return CycleStability::Unstable;
        if (dd < 1e-3 * opts.epsilon) {
          back = true;
          break;
        }
      }
    } catch (const InvalidStateError&) {
      return CycleStability::Unstable;
    }
    all_back = all_back && back;
  }
  return all_back ? CycleStability::Stable : CycleStability::Neutral;
}

Cycle classify_cycle(const Cycle& c, const NormalizedParameters& np, const ClassifyOptions& opts) {
  if (c.points.empty() || c.period != c.points.size()) {
    throw std::invalid_argument("classify_cycle: malformed cycle");
  }
  Cycle out = c;
  out.touches_boundary = std::any_of(c.points.begin(), c.points.end(), [&](const DiscreteState& s) {
    return on_boundary(s, np, opts.boundary_tol);
  });
  const auto m = monodromy(c, np);
  Eigen::Matrix2d mm;
  mm << m[0], m[1], m[2], m[3];
  const Eigen::Vector2cd ev = mm.eigenvalues();
  out.multipliers = {ev(0), ev(1)};
  std::sort(out.multipliers.begin(), out.multipliers.end(),
            [](auto a, auto b) { return std::abs(a) > std::abs(b); });
  out.perturbation = perturbation_stability(c, np, opts);
  if (out.touches_boundary) {
    out.stability = *out.perturbation;
  } else {
    const double lead = std::abs(out.multipliers[0]);
    if (lead < 1.0 - opts.multiplier_margin) {
      out.stability = CycleStability::Stable;
    } else if (lead > 1.0 + opts.multiplier_margin) {
      out.stability = CycleStability::Unstable;
    } else {
      out.stability = CycleStability::Neutral;
    }
  }
  out.classified = true;
  return out;
}

}  // namespace cppll::cycles
