#include "cppll/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <omp.h>

namespace cppll::stability {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cross(const Vec2& a, const Vec2& b) { return a(0) * b(1) - a(1) * b(0); }

Vec2 unit(const Vec2& v) { return v / v.norm(); }

void require_stable_region(const NormalizedParameters& np) {
  if (!lyapunov_positive_definite(np.beta)) {
    throw std::domain_error("Lyapunov matrix H is not positive definite (beta outside (0, 2))");
  }
}

}  // namespace

bool ConicalPiece::contains(const Vec2& h, double tol) const {
  const double scale = h.norm();
  if (scale == 0.0) return true;
  return cross(ray_start, h) >= -tol * scale * ray_start.norm() &&
         cross(h, ray_end) >= -tol * scale * ray_end.norm();
}

Pieces linearized_pieces(const NormalizedParameters& np) {
  np.validate();
  const double a = np.alpha;
  const double b = np.beta;
  const Vec2 l2(1.0, 1.0);         // p >= 0, u = p
  const Vec2 up(0.0, 1.0);         // p = 0, u > 0
  const Vec2 l3(-1.0, a - 1.0);    // p <= 0, u = (1 - alpha) p
  const Vec2 down(0.0, -1.0);      // p = 0, u < 0

  Mat2 a1;
  a1 << 1.0, -1.0, 2.0 * b, 1.0 + a - 2.0 * b;
  a1 /= 1.0 + a;
  Mat2 a2;
  a2 << 1.0 - a, -1.0, 2.0 * b * (1.0 - a), 1.0 - 2.0 * b;
  Mat2 a3;
  a3 << 1.0, -1.0, 2.0 * b, 1.0 - 2.0 * b;
  Mat2 a4;
  a4 << 1.0 - a, -1.0, 2.0 * b * (1.0 - a), 1.0 + a - 2.0 * b;
  a4 /= 1.0 + a;

  return {ConicalPiece{1, BranchId::QuadPos, down, l2, a1},
          ConicalPiece{2, BranchId::LinNeg, up, l3, a2},
          ConicalPiece{3, BranchId::FracPos, l2, up, a3},
          ConicalPiece{4, BranchId::QuadNeg, l3, down, a4}};
}

const ConicalPiece& piece_for(const Pieces& pieces, const Vec2& h) {
  for (const auto& pc : pieces) {
    if (pc.contains(h)) return pc;
  }
  // Rounding on a shared ray; fall back to the nearest sector.
  for (const auto& pc : pieces) {
    if (pc.contains(h, 1e-12)) return pc;
  }
  throw std::logic_error("piece_for: pieces do not cover the plane");
}

Vec2 differential_apply(const Pieces& pieces, const Vec2& h) {
  if (h.isZero(0.0)) return Vec2::Zero();
  return piece_for(pieces, h).matrix * h;
}

Vec2 differential_apply(const Vec2& h, const NormalizedParameters& np) {
  return differential_apply(linearized_pieces(np), h);
}

ContinuityReport continuity_check(const Pieces& pieces, double tol) {
  ContinuityReport rep;
  for (const auto& left : pieces) {
    for (const auto& right : pieces) {
      // `right` starts where `left` ends.
      if (&left == &right) continue;
      const Vec2 ray = left.ray_end;
      if (std::abs(cross(ray, right.ray_start)) > 1e-15 * ray.norm() * right.ray_start.norm() ||
          ray.dot(right.ray_start) <= 0.0) {
        continue;
      }
      const Vec2 r = unit(ray);
      const double mismatch = (left.matrix * r - right.matrix * r).norm();
      rep.max_mismatch = std::max(rep.max_mismatch, mismatch);
      if (mismatch > tol) {
        rep.ok = false;
        rep.detail += "A" + std::to_string(left.index) + " and A" + std::to_string(right.index) +
                      " disagree on ray (" + std::to_string(r(0)) + ", " + std::to_string(r(1)) +
                      ") by " + std::to_string(mismatch) + "; ";
      }
    }
  }
  return rep;
}

Mat2 lyapunov_matrix(double beta) {
  Mat2 h;
  h << 2.0 * beta, -beta, -beta, 1.0;
  return h;
}

bool lyapunov_positive_definite(double beta) { return beta > 0.0 && beta < 2.0; }

double lyapunov_decrement(const Vec2& x, const NormalizedParameters& np) {
  require_stable_region(np);
  const Mat2 h = lyapunov_matrix(np.beta);
  const Vec2 y = differential_apply(x, np);
  return y.dot(h * y) - x.dot(h * x);
}

Mat2 decrement_form(int piece, const NormalizedParameters& np) {
  const double a = np.alpha;
  const double b = np.beta;
  const double k = 2.0 * a * b / ((1.0 + a) * (1.0 + a));
  Mat2 m;
  switch (piece) {
    case 1:
      m << a + 2.0, -(a + 3.0) / 2.0, -(a + 3.0) / 2.0, 1.0;
      return -k * m;
    case 2:
      m << 2.0 * (a - 2.0), 1.0, 1.0, 0.0;
      return a * b * m;
    case 3:
      return Mat2::Zero();
    case 4:
      m << 4.0, -2.0, -2.0, 1.0;
      return -k * m;
    default:
      throw std::invalid_argument("decrement_form: piece must be 1..4");
  }
}

LaSalleReport lasalle_check(const NormalizedParameters& np, std::size_t samples,
                            std::uint64_t seed, double margin) {
  require_stable_region(np);
  const Pieces pieces = linearized_pieces(np);
  const Mat2 h = lyapunov_matrix(np.beta);
  const double theta_l2 = kPi / 4.0;
  const double theta_up = kPi / 2.0;
  const double theta_y1 = std::atan2(-2.0, -1.0) + 2.0 * kPi;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  LaSalleReport rep;
  rep.max_relative_off_set = -std::numeric_limits<double>::infinity();

  auto relative_decrement = [&](const Vec2& x) {
    const Vec2 y = differential_apply(pieces, x);
    const double v = x.dot(h * x);
    return (y.dot(h * y) - v) / v;
  };

  // On E.
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = theta_l2 + (theta_up - theta_l2) * (static_cast<double>(i) + 0.5) /
                                    static_cast<double>(samples);
    rep.max_abs_on_invariant_set =
        std::max(rep.max_abs_on_invariant_set, std::abs(relative_decrement({std::cos(t), std::sin(t)})));
  }
  rep.max_abs_on_invariant_set =
      std::max(rep.max_abs_on_invariant_set, std::abs(relative_decrement({-1.0, -2.0})));

  // Off E.
  std::size_t taken = 0;
  while (taken < samples) {
    double t = angle(rng);
    const bool in_p3 = t >= theta_l2 - margin && t <= theta_up + margin;
    const double dy = std::abs(std::remainder(t - theta_y1, 2.0 * kPi));
    if (in_p3 || dy < margin) continue;
    rep.max_relative_off_set =
        std::max(rep.max_relative_off_set, relative_decrement({std::cos(t), std::sin(t)}));
    ++taken;
  }
  rep.samples = samples;
  rep.ok = rep.max_abs_on_invariant_set <= 1e-12 && rep.max_relative_off_set < 0.0;
  return rep;
}

std::string_view to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::LocallyStable: return "LocallyStable";
    case StabilityClass::UnstableBeta: return "UnstableBeta";
    case StabilityClass::OverloadAtLock: return "OverloadAtLock";
    case StabilityClass::Boundary: return "Boundary";
  }
  return "?";
}

StabilityClass classify_parameters(const NormalizedParameters& np) {
  np.validate();
  if (np.alpha >= 1.0) return StabilityClass::OverloadAtLock;
  if (np.beta > 2.0) return StabilityClass::UnstableBeta;
  if (np.beta == 2.0) return StabilityClass::Boundary;
  return StabilityClass::LocallyStable;
}

std::string_view to_string(Binding b) { return b == Binding::Beta ? "beta" : "alpha"; }

namespace {

RangeBound range_bound(const PhysicalParameters& phys, double c_factor) {
  phys.validate();
  const double ki = phys.vco_gain_hz_per_volt * phys.pump_current_amps;
  RangeBound r;
  r.beta_term = std::sqrt(c_factor * phys.capacitance_farads / ki);
  r.alpha_term = 1.0 / (ki * phys.resistance_ohms);
  r.binding = r.beta_term <= r.alpha_term ? Binding::Beta : Binding::Alpha;
  r.period_seconds = std::min(r.beta_term, r.alpha_term);
  return r;
}

}  // namespace

RangeBound hold_in(const PhysicalParameters& phys) { return range_bound(phys, 4.0); }

RangeBound pull_in_bound(const PhysicalParameters& phys) { return range_bound(phys, 3.0); }

Witness instability_witness(const NormalizedParameters& np, std::size_t orbit_steps) {
  np.validate();
  if (!(np.beta > 2.0)) throw std::domain_error("instability witness requires beta > 2");
  const Pieces pieces = linearized_pieces(np);
  const Mat2& a3 = pieces[2].matrix;
  const Mat2& a4 = pieces[3].matrix;
  const Mat2 prod = a4 * a3;

  Eigen::EigenSolver<Mat2> es(prod);
  const auto ev = es.eigenvalues();
  if (std::abs(ev(0).imag()) > 1e-12 || std::abs(ev(1).imag()) > 1e-12) {
    throw std::domain_error("A4 A3 has complex eigenvalues");
  }
  const int lead = ev(0).real() >= ev(1).real() ? 0 : 1;
  Witness w;
  w.lambda1 = ev(lead).real();
  w.lambda2 = ev(1 - lead).real();
  w.x1 = es.eigenvectors().col(lead).real();
  w.x1 = unit(w.x1);
  if (w.x1(0) < 0.0) w.x1 = -w.x1;
  w.a3x1 = a3 * w.x1;

  if (!(w.lambda1 > 1.0)) throw std::domain_error("leading eigenvalue of A4 A3 is not > 1");
  if (!pieces[2].contains(w.x1, 1e-12)) throw std::domain_error("x1 is not in the A3 cone");
  if (!pieces[3].contains(w.a3x1, 1e-12)) throw std::domain_error("A3 x1 is not in the A4 cone");

  Vec2 x = w.x1;
  w.orbit.states.push_back({x(0), x(1)});
  for (std::size_t k = 0; k < orbit_steps; ++k) {
    const bool even = k % 2 == 0;
    x = (even ? a3 : a4) * x;
    w.orbit.states.push_back({x(0), x(1)});
    w.orbit.branches.push_back(even ? BranchId::FracPos : BranchId::QuadNeg);
  }
  w.orbit.termination = Termination::Diverged;
  return w;
}

namespace {

struct Sector {
  Vec2 a;
  Vec2 b;
  Mat2 m;  // q^t restricted to the sector
};

// Max of x'Nx / x'Hx over the sector spanned by unit vectors a -> b.
double sector_max_ratio(const Vec2& a, const Vec2& b, const Mat2& n, const Mat2& h) {
  auto ratio = [&](const Vec2& x) { return x.dot(n * x) / x.dot(h * x); };
  double best = std::max(ratio(a), ratio(b));
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> ges(n, h);
  for (int i = 0; i < 2; ++i) {
    const Vec2 v = ges.eigenvectors().col(i);
    for (const Vec2& cand : {v, Vec2(-v)}) {
      if (cross(a, cand) > 0.0 && cross(cand, b) > 0.0) best = std::max(best, ratio(cand));
    }
  }
  return best;
}

std::vector<Sector> refine(const std::vector<Sector>& sectors, const Pieces& pieces) {
  std::vector<Sector> out;
  out.reserve(sectors.size() + 4);
  std::vector<double> cuts;
  for (const Sector& s : sectors) {
    const Vec2 ia = s.m * s.a;
    const Vec2 ib = s.m * s.b;
    cuts.assign({0.0});
    for (const auto& pc : pieces) {
      const Vec2& r = pc.ray_start;
      const double ca = cross(ia, r);
      const double cb = cross(ib, r);
      if (ca > 0.0 && cb < 0.0) cuts.push_back(ca / (ca - cb));
    }
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const Vec2 a = unit((1.0 - cuts[i]) * s.a + cuts[i] * s.b);
      const Vec2 b = unit((1.0 - cuts[i + 1]) * s.a + cuts[i + 1] * s.b);
      const Vec2 mid = s.m * (a + b);
      const Mat2& step = piece_for(pieces, mid).matrix;
      out.push_back({a, b, step * s.m});
    }
  }
  return out;
}

std::vector<Sector> initial_sectors(const Pieces& pieces) {
  std::vector<Sector> s;
  for (const auto& pc : pieces) s.push_back({unit(pc.ray_start), unit(pc.ray_end), Mat2::Identity()});
  return s;
}

double sectors_sup(const std::vector<Sector>& sectors, const Mat2& h) {
  double best = 0.0;
  for (const Sector& s : sectors) {
    best = std::max(best, sector_max_ratio(s.a, s.b, s.m.transpose() * h * s.m, h));
  }
  return best;
}

}  // namespace

double sup_contraction_ratio(const NormalizedParameters& np, const Mat2& h, std::size_t m) {
  const Pieces pieces = linearized_pieces(np);
  std::vector<Sector> sectors = initial_sectors(pieces);
  for (std::size_t t = 0; t < m; ++t) sectors = refine(sectors, pieces);
  return sectors_sup(sectors, h);
}

CertificateResult contraction_certificate(const NormalizedParameters& np, double eta,
                                          const CertificateOptions& opts) {
  np.validate();
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  CertificateResult res;
  res.certificate.eta = eta;
  if (!(np.alpha < 1.0)) {
    res.failure = "alpha >= 1: local overload, differential not orientation preserving";
    return res;
  }
  if (!lyapunov_positive_definite(np.beta)) {
    res.failure = "beta outside (0, 2): H is not positive definite";
    return res;
  }
  if (std::abs(np.beta - 1.5) <= 1e-12) {
    res.failure = "beta = 3/2: the differential has a continuum of period-3 orbits";
    return res;
  }

  const Pieces pieces = linearized_pieces(np);
  const Mat2 h = lyapunov_matrix(np.beta);
  res.certificate.h = h;

  // Net on {x : x'Hx = 1}: x = L^{-T} y for y on the unit circle, H = L L'.
  const Mat2 l_inv_t = Eigen::LLT<Mat2>(h).matrixU().solve(Mat2::Identity());
  const double radius = std::sqrt(eta) / 2.0;
  const double spacing = 4.0 * std::asin(std::min(1.0, radius / 2.0));
  const std::size_t k = std::max<std::size_t>(
      opts.min_net_points, static_cast<std::size_t>(std::ceil(2.0 * kPi / spacing)) + 1);
  res.net_points = k;

  auto p_norm = [&](const Vec2& x) { return std::sqrt(x.dot(h * x)); };

  std::size_t net_m = 0;
  bool capped = false;
  const long long kk = static_cast<long long>(k);
#pragma omp parallel for reduction(max : net_m) reduction(|| : capped) schedule(static)
  for (long long j = 0; j < kk; ++j) {
    const double t = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(kk);
    Vec2 x = l_inv_t * Vec2(std::cos(t), std::sin(t));
    std::size_t steps = 0;
    while (p_norm(x) >= radius) {
      if (steps >= opts.max_exponent) {
        capped = true;
        break;
      }
      x = differential_apply(pieces, x);
      ++steps;
    }
    net_m = std::max(net_m, steps);
  }
  res.net_exponent = net_m;
  if (capped) {
    res.failure = "net points did not contract within the exponent cap";
    return res;
  }

  // Exact check over the sectors where q^m is linear.
  std::vector<Sector> sectors = initial_sectors(pieces);
  std::size_t m = 0;
  for (; m < net_m; ++m) sectors = refine(sectors, pieces);
  double ratio = sectors_sup(sectors, h);
  while (ratio > eta && m < opts.max_exponent) {
    sectors = refine(sectors, pieces);
    ++m;
    ratio = sectors_sup(sectors, h);
  }
  res.exact_ratio = ratio;
  res.certificate.m = m;
  if (ratio > eta) {
    res.failure = "exact contraction ratio above eta at the exponent cap";
    return res;
  }
  res.certified = true;
  return res;
}

}  // namespace cppll::stability
