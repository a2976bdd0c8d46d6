#pragma once

// Canonical variation of a submersion metric: vertical lengths scale by
// (1 - eps), horizontal lengths stay untouched,
//   g_eps(X, Y) = g((I - eps*V)X, (I - eps*V)Y).
//
// The varied metric is exposed as an ordinary metric field, so Christoffels,
// curvature, and projectors of g_eps all come from the same generic chart
// machinery as g itself.  The checks in this module compare those direct
// computations against closed-form expressions in the unvaried connection and
// the projector derivative; because the two routes share no code beyond jet
// arithmetic, agreement is a genuine cross-validation.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fibershrink/geometry.hpp"
#include "fibershrink/report.hpp"
#include "fibershrink/submersion.hpp"

namespace fibershrink {

/// Shrink parameter.  The metric stays nondegenerate for eps < 1; negative
/// values enlarge the fibers and are fully supported.
struct EpsilonParam {
  double eps = 0.0;

  /// Factor multiplying vertical lengths.
  double shrink() const { return 1.0 - eps; }
  /// Coefficient eps*(2-eps) recurring in every first-order formula; equals
  /// 1 - shrink()^2.
  double coeff() const { return eps * (2.0 - eps); }
};

/// A submersion together with its fiber-scaled metric field.
struct VariedMetric {
  SubmersionSpec base;
  EpsilonParam eps;
  MetricField metric;  // evaluates g_eps on the total chart
};

/// Builds the varied metric field.  Requires 1 - eps > 1e-6 so that g_eps
/// stays invertible; throws SingularMetricError otherwise.  Formula-only
/// evaluations that accept eps = 1 take a plain eps argument instead of a
/// VariedMetric.
VariedMetric make_varied_metric(const SubmersionSpec& s, double eps);

/// Jets of g_eps at p.  Exactly symmetric, and bitwise equal to the unvaried
/// metric at eps = 0.
JetMat g_eps_at(const VariedMetric& vm, const ChartPoint& p, int order = 3);

/// Difference tensor between the varied and unvaried Levi-Civita connections,
/// computed directly from both metrics' Christoffels: index i -> jet matrix
/// over (j, k).
std::vector<JetMat> gamma_eps_jets_at(const VariedMetric& vm, const ChartPoint& p);

/// Point values of the difference tensor (direct route).
std::vector<Eigen::MatrixXd> gamma_eps_direct_at(const VariedMetric& vm, const ChartPoint& p);

/// Closed-form difference tensor
///   eps(2-eps) * (dH(HX)·VY + dH(HY)·VX + dH(VX)·VY)
/// from an already-computed jet bundle; polynomial in eps, so eps = 1 is
/// allowed here.  Symmetric in (X, Y) and always horizontal.
Eigen::VectorXd gamma_eps_formula(const SubmersionJets& sj, double eps, const Eigen::VectorXd& X,
                                  const Eigen::VectorXd& Y);

/// Convenience overload computing the jet bundle at p first.
Eigen::VectorXd gamma_eps_formula_at(const VariedMetric& vm, const ChartPoint& p,
                                     const Eigen::VectorXd& X, const Eigen::VectorXd& Y);

/// Residual of the varied-metric derivative identity
///   (nabla_X g_eps)(Y, Z) = eps(2-eps) * g(Y, dH(X)·Z),
/// where nabla is the unvaried Levi-Civita connection and the left side is
/// assembled from jets of g_eps on constant-coefficient fields Y, Z.
double varied_metric_derivative_check(const VariedMetric& vm, const ChartPoint& p,
                                      const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                      const Eigen::VectorXd& Z);

/// Hessian of the projection contracted with X, Y: a base-tangent vector,
/// combining coordinate second derivatives, pulled-back base Christoffels,
/// and the domain connection.
Eigen::VectorXd projection_hessian_at(const SubmersionSpec& s, const ChartPoint& p,
                                      const Eigen::VectorXd& X, const Eigen::VectorXd& Y);

/// Residual of eps(2-eps) * hessian(pi)(X, Y) = Dpi * gamma_eps(X, Y) using
/// the closed-form difference tensor; accepts eps = 1, where the coefficient
/// is exactly 1.
double projection_hessian_check(const SubmersionSpec& s, double eps, const ChartPoint& p,
                                const Eigen::VectorXd& X, const Eigen::VectorXd& Y);

/// Accumulates the variation identity residuals at one point: metric block
/// values, projector invariance, both difference-tensor routes, symmetry and
/// horizontality, the metric-derivative identity, the projection-Hessian
/// balance, and the four varied-connection comparison lines.
void variation_identity_residuals(const VariedMetric& vm, const ChartPoint& p, class Rng& rng,
                                  ResidualAccumulator& acc);

/// Runs the variation suite over seeded sample points of the total chart.
ResidualReport run_variation_suite(const SubmersionSpec& spec, double eps, int n_points,
                                   std::uint64_t seed, double tol);

}  // namespace fibershrink
