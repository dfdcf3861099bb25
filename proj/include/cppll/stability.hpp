// Local stability of the locked state: the piecewise-linear differential of
// the map at the origin, its quadratic Lyapunov function, contraction
// certificates, the beta > 2 instability witness and the hold-in / pull-in
// range formulas.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "cppll/model.hpp"

namespace cppll::stability {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// A closed sector of the (p, u) plane swept counter-clockwise from
/// `ray_start` to `ray_end` (opening angle < pi), and the linear map the
/// differential uses on it.
struct ConicalPiece {
  int index = 0;             // 1..4, the A_j numbering
  BranchId branch = BranchId::FracPos;  // map branch this piece linearizes
  Vec2 ray_start = Vec2::Zero();
  Vec2 ray_end = Vec2::Zero();
  Mat2 matrix = Mat2::Zero();

  /// True if h lies in the sector, allowing a relative slack `tol`.
  bool contains(const Vec2& h, double tol = 0.0) const;
};

using Pieces = std::array<ConicalPiece, 4>;

/// A1..A4 on their cones:
///   A1: p >= 0, u <= p          (QuadPos)
///   A2: p <= 0, u >= (1-alpha)p (LinNeg)
///   A3: p >= 0, u >= p          (FracPos)
///   A4: p <= 0, u <= (1-alpha)p (QuadNeg)
Pieces linearized_pieces(const NormalizedParameters& np);

/// The piece containing h (first match in A1..A4 order on shared rays).
const ConicalPiece& piece_for(const Pieces& pieces, const Vec2& h);

Vec2 differential_apply(const Pieces& pieces, const Vec2& h);
Vec2 differential_apply(const Vec2& h, const NormalizedParameters& np);

struct ContinuityReport {
  bool ok = true;
  double max_mismatch = 0.0;
  std::string detail;  // offending ray, when !ok
};

/// Checks that adjacent pieces agree on their four shared rays.
ContinuityReport continuity_check(const Pieces& pieces, double tol = 1e-12);

/// H = [[2 beta, -beta], [-beta, 1]]; positive definite iff 0 < beta < 2.
Mat2 lyapunov_matrix(double beta);
bool lyapunov_positive_definite(double beta);

/// V(q(x)) - V(x) with V(x) = x' H x. Throws std::domain_error when H is
/// not positive definite.
double lyapunov_decrement(const Vec2& x, const NormalizedParameters& np);

/// Closed form of A_j' H A_j - H for piece j (1..4):
///   j=1: -(2 a b / (1+a)^2) [[a+2, -(a+3)/2], [-(a+3)/2, 1]]
///   j=2:  a b [[2(a-2), 1], [1, 0]]
///   j=3:  0
///   j=4: -(2 a b / (1+a)^2) [[4, -2], [-2, 1]]
Mat2 decrement_form(int piece, const NormalizedParameters& np);

struct LaSalleReport {
  double max_abs_on_invariant_set = 0.0;   // |decrement| / V on P3 and the ray y1
  double max_relative_off_set = 0.0;       // largest decrement / V elsewhere (< 0 expected)
  std::size_t samples = 0;
  bool ok = false;
};

/// Samples the decrement: zero on E = P3 u {r(-1,-2), r >= 0} and strictly
/// negative at directions farther than `margin` radians from E.
LaSalleReport lasalle_check(const NormalizedParameters& np, std::size_t samples,
                            std::uint64_t seed, double margin = 1e-3);

enum class StabilityClass { LocallyStable, UnstableBeta, OverloadAtLock, Boundary };
std::string_view to_string(StabilityClass c);

/// OverloadAtLock for alpha >= 1 (takes precedence), UnstableBeta for
/// beta > 2, Boundary for beta == 2, LocallyStable otherwise. beta = 3/2
/// is LocallyStable even though the linearization alone is only neutral.
StabilityClass classify_parameters(const NormalizedParameters& np);

enum class Binding { Beta, Alpha };
std::string_view to_string(Binding b);

struct RangeBound {
  double period_seconds = 0.0;
  Binding binding = Binding::Beta;
  double beta_term = 0.0;   // sqrt(4C/(K I)) or sqrt(3C/(K I))
  double alpha_term = 0.0;  // 1/(K I R)
};

/// min{sqrt(4C/(K_vco I_p)), 1/(K_vco I_p R)}.
RangeBound hold_in(const PhysicalParameters& phys);
/// min{sqrt(3C/(K_vco I_p)), 1/(K_vco I_p R)}.
RangeBound pull_in_bound(const PhysicalParameters& phys);

struct Witness {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Vec2 x1 = Vec2::Zero();  // in the A3 cone, unit length
  Vec2 a3x1 = Vec2::Zero();  // in the A4 cone
  Trajectory orbit;          // linearized orbit x1, A3 x1, lambda1 x1, ...
};

/// Divergent orbit of the differential for beta > 2: the leading
/// eigenvector of A4 A3. Throws std::domain_error for beta <= 2 or when
/// the eigenvector does not satisfy the cone conditions.
Witness instability_witness(const NormalizedParameters& np, std::size_t orbit_steps = 20);

struct LyapunovCertificate {
  Mat2 h = Mat2::Zero();
  double eta = 0.0;
  std::size_t m = 0;
};

struct CertificateOptions {
  std::size_t max_exponent = 100000;
  std::size_t min_net_points = 64;
};

struct CertificateResult {
  bool certified = false;
  LyapunovCertificate certificate;
  std::size_t net_points = 0;
  std::size_t net_exponent = 0;   // m from the net construction alone
  double exact_ratio = 0.0;       // sup V(q^m x) / V(x) over all x != 0
  std::string failure;
};

/// Contraction exponent m with V(q^m(x)) <= eta V(x) for all x. The net on
/// the H-unit circle gives a candidate m; the sup of V(q^m x)/V(x) is then
/// computed exactly over the sectors on which q^m is linear, and m is
/// raised until it is <= eta.
CertificateResult contraction_certificate(const NormalizedParameters& np, double eta,
                                          const CertificateOptions& opts = {});

/// sup over x != 0 of V(q^m x) / V(x), exact up to rounding.
double sup_contraction_ratio(const NormalizedParameters& np, const Mat2& h, std::size_t m);

}  // namespace cppll::stability
