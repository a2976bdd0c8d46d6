#pragma once

// Curvature of the fiber-scaled metric, measured two independent ways.
//
// The direct route treats g_eps as an ordinary metric field and runs the
// generic chart machinery (Christoffels, Riemann tensor).  The closed-form
// route expresses every curvature pairing of g_eps through unvaried data
// only: the curvature of g, the split-connection curvature, the projector
// derivative, and the base curvature pulled up through the projection.  The
// two routes share nothing beyond jet arithmetic, so their agreement
// certifies both.
//
// Pairings are measured in the scaled frame V_i / (1 - eps), H_j, which is
// orthonormal for g_eps whenever V_i, H_j is orthonormal for g.

#include <cstdint>

#include <Eigen/Core>

#include "fibershrink/geometry.hpp"
#include "fibershrink/report.hpp"
#include "fibershrink/submersion.hpp"
#include "fibershrink/variation.hpp"

namespace fibershrink {

/// Frame block of a curvature pairing: the first letter names the vector the
/// curvature operator is applied to, the second the vector it is paired
/// against (V = scaled vertical frame vector, H = horizontal frame vector).
enum class CurvatureBlock { VV, HV, VH, HH };

/// Which kind of frame vector a projector-twisted comparison feeds to the
/// twisted curvature operator.
enum class ArgKind { Horizontal, Vertical };

/// Both sides of one curvature block identity at one point, measured with
/// the same scaled frame and the same g_eps inner product.
struct CurvatureComparison {
  double eps = 0.0;
  ChartPoint point;
  FrameValue frame;     // scaled frame: vertical columns divided by 1 - eps
  Eigen::MatrixXd lhs;  // direct g_eps pairings of the varied curvature
  Eigen::MatrixXd rhs;  // closed-form side, assembled from unvaried data
  double residual = 0.0;  // max abs entrywise difference
};

/// Riemann tensor of g_eps at p via the generic chart machinery.  Requires
/// eps < 1 (enforced when the varied metric is built).
Riemann4 r_eps_direct_at(const VariedMetric& vm, const ChartPoint& p);

/// One block of the varied-curvature comparison.  The left side pairs the
/// direct curvature of g_eps with scaled frame vectors under g_eps; the
/// right side is the matching closed form:
///   VV:  g(Rsplit(X,Y)V_i, V_j) - (1-eps)^2 g([dH(X), dH(Y)] V_i, V_j)
///   HV:  (1-eps) [ g([R(X,Y),H] H_i, V_j)
///          + eps(2-eps) g(dH(X) dH(H_i) Y - dH(Y) dH(H_i) X, V_j) ]
///   VH:  (eps-1) [ g([R(X,Y),H] V_i, H_j)
///          + eps(2-eps) g(dH(dH(Y)V_i) X - dH(dH(X)V_i) Y, H_j) ]
///   HH:  eps(2-eps) g_B(R^B(Dpi X, Dpi Y) Dpi H_i, Dpi H_j)
///          + (1-eps)^2 g(R(X,Y) H_i, H_j)
/// At eps = 0 each block reduces to a decomposition identity of R itself.
CurvatureComparison curvature_block_check(const VariedMetric& vm, const ChartPoint& p,
                                          const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                          CurvatureBlock block);

/// Worst frame-measured residual, over frame vectors W of the selected kind,
/// of the twisted-curvature comparison [R_eps(X,Y), H] W against its closed
/// form.  For horizontal W:
///   [R(X,Y),H] W + eps(2-eps) (dH(X) dH(W) VY - dH(Y) dH(W) VX)
/// and for vertical W:
///   (1-eps)^2 ( [R(X,Y),H] W + eps(2-eps) (dH(dH(Y)W) VX - dH(dH(X)W) VY) ).
double twisted_curvature_check(const VariedMetric& vm, const ChartPoint& p,
                               const Eigen::VectorXd& X, const Eigen::VectorXd& Y, ArgKind arg);

/// Residual of the adjointness relation between the two nested projector
/// derivatives appearing in the mixed curvature blocks:
///   g(dH(dH(Y)V) X, H) + g(dH(Y) dH(H) X, V) = 0
/// with V projected vertical and H horizontal internally; X, Y arbitrary.
double projector_derivative_duality_check(const SubmersionSpec& s, const ChartPoint& p,
                                          const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                          const Eigen::VectorXd& V, const Eigen::VectorXd& H);

/// Residual of the pushforward of the varied curvature:
///   Dpi R_eps(X,Y)Z = eps(2-eps) R^B(Dpi X, Dpi Y) Dpi Z
///                     + (1-eps)^2 Dpi R(X,Y)Z
///                     - (1-eps)^2 eps(2-eps) Dpi [G(X,G(Y,Z)) - G(Y,G(X,Z))]
/// where G(X,Y) = dH(HX)VY + dH(HY)VX + dH(VX)VY is the unscaled shape of
/// the connection difference tensor.  The last term vanishes for horizontal
/// Z (a projector-derivative symmetry), at eps in {0, 1}, and whenever the
/// horizontal distribution is integrable, but is required for general
/// arguments at intermediate eps.
double curvature_pushforward_check(const VariedMetric& vm, const ChartPoint& p,
                                   const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                   const Eigen::VectorXd& Z);

/// Residual of the derivative of the projection-Hessian balance:
///   eps(2-eps) (nabla^3 pi)(X,Y,Z)
///     = Dpi [ (nabla_X D)(Y,Z) + D(X, D(Y,Z)) / (eps(2-eps)) ]
/// where D is the connection difference tensor of g_eps and nabla the
/// unvaried connection.  Differentiating the Hessian balance
/// eps(2-eps) hess(pi) = Dpi D forces the quadratic term's divisor: the
/// derivative of Dpi contributes hess(pi)(X, D(Y,Z)), which the balance
/// itself converts into Dpi D(X, D(Y,Z)) / (eps(2-eps)).  At eps = 1 the
/// divisor is exactly 1.
double projection_third_derivative_check(const VariedMetric& vm, const ChartPoint& p,
                                         const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                         const Eigen::VectorXd& Z);

/// Residual of the curvature of g_eps assembled from the difference tensor:
///   R_eps(X,Y)Z = R(X,Y)Z + (nabla_X D)(Y,Z) + D(X, D(Y,Z))
///                 - (nabla_Y D)(X,Z) - D(Y, D(X,Z)).
double curvature_from_difference_check(const VariedMetric& vm, const ChartPoint& p,
                                       const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                       const Eigen::VectorXd& Z);

/// Residual of the exchange rule for the third derivative of the projection
/// (independent of eps):
///   (nabla^3 pi)(X,Y,Z) - (nabla^3 pi)(Y,X,Z)
///     = R^B(Dpi X, Dpi Y) Dpi Z - Dpi R(X,Y)Z.
double third_derivative_exchange_check(const SubmersionSpec& s, const ChartPoint& p,
                                       const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                       const Eigen::VectorXd& Z);

/// Shrink-limit check of the curvature pushforward.  g_1 is degenerate, so
/// the eps = 1 statement Dpi R_1(X,Y)Z = R^B(Dpi X, Dpi Y) Dpi Z is checked
/// by extrapolation: Dpi R_eps(X,Y)Z is affine in u = (1-eps)^2 up to a
/// u^2 term that vanishes at the limit, so samples at eps in
/// {0.9, 0.99, 0.999} are fitted per component by least squares and the
/// u = 0 intercept is compared against the base curvature.
double curvature_pushforward_limit_check(const SubmersionSpec& s, const ChartPoint& p,
                                         const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                         const Eigen::VectorXd& Z);

/// Accumulates every curvature-comparison residual at one point with
/// rng-supplied probe vectors: the four blocks, both twisted-curvature
/// comparisons, the derivative duality, the pushforward, and the three
/// difference-tensor identities.
void curvature_identity_residuals(const VariedMetric& vm, const ChartPoint& p, class Rng& rng,
                                  ResidualAccumulator& acc);

/// Runs the curvature comparison suite over seeded sample points.
ResidualReport run_curvature_suite(const SubmersionSpec& spec, double eps, int n_points,
                                   std::uint64_t seed, double tol);

}  // namespace fibershrink
