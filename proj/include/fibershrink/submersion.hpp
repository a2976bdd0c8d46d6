#pragma once

// Projector calculus for a semi-Riemannian submersion pi: (M, g) -> (B, g_B).
//
// The vertical projector field V projects onto ker(Dpi) g-orthogonally, and
// H = I - V.  Everything downstream (connection splitting, curvature
// comparison, metric variation) is phrased through H and its covariant
// derivatives, so this module computes all of those as jets at a point and
// provides the identity suite that certifies the calculus numerically.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "fibershrink/geometry.hpp"
#include "fibershrink/report.hpp"

namespace fibershrink {

/// Smooth map between charts, evaluated on jets.
struct ProjectionMap {
  int domain_dim = 0;
  int base_dim = 0;
  std::function<JetVec(const JetVec&)> eval;
};

/// Parametrization of the total space by (fiber coords, base coords); used
/// for fiberwise integration.  `embed` receives the concatenated jet vector
/// (fiber first) and returns total-space coordinates.
struct Trivialization {
  Chart fiber;
  std::function<JetVec(const JetVec&)> embed;
};

struct SubmersionSpec {
  MetricField total;
  MetricField base;
  ProjectionMap proj;
};

/// Jets of the full projector pipeline at one point.
struct SubmersionJets {
  MetricJets total;            // metric, inverse, Christoffels on M
  JetVec y;                    // base coordinates of pi(x), jets in domain vars
  JetMat dpi;                  // differential, base_dim x n
  JetMat vertical_basis;       // kernel basis of dpi, n x vdim
  JetMat V, H;                 // g-orthogonal projector fields
  std::vector<JetMat> nablaH;  // k -> nabla_k H
  Nabla2 nabla2H;              // second covariant derivative values
  Riemann4 R;                  // curvature of g
  Riemann4 Rsplit;             // curvature of the split connection V nabla V + H nabla H
  FrameValue frame;            // orthonormal frame, vertical columns first
  int vdim = 0;
  int hdim = 0;

  Eigen::MatrixXd gv, Vv, Hv, dpiv;  // point values of g, V, H, Dpi

  /// Values of nabla_X H.
  Eigen::MatrixXd dH(const Eigen::VectorXd& X) const;
  /// Values of R(X,Y) as an endomorphism.
  Eigen::MatrixXd Rop(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const;
  /// Values of [R(X,Y), H], the projector-twisted curvature.
  Eigen::MatrixXd RHop(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const;
};

SubmersionJets submersion_jets_at(const SubmersionSpec& spec, const ChartPoint& p);

/// g-orthogonal projector onto ker(dpi), as jets.  Throws
/// NotASubmersionError when dpi drops rank and DegenerateRestrictionError
/// when the metric restricted to the kernel is degenerate.
JetMat vertical_projector_jets(const JetMat& g, const JetMat& dpi);

/// Projection-related jets alone (no metric): base point, differential, and
/// the base Christoffels pulled back through the map.  Shared by the map
/// Hessian for every metric on the domain.
struct MapJets {
  JetVec x;
  JetVec y;
  JetMat dpi;
  std::vector<JetMat> gammaB_pulled;  // a -> (b,c) matrix of base Christoffels at pi(x)
};

MapJets map_jets_at(const SubmersionSpec& spec, const ChartPoint& p);

/// Hessian of the map w.r.t. a domain connection `gamma` and the base
/// Levi-Civita connection: a -> jet matrix of (nabla^2 pi)^a_{kl}.
std::vector<JetMat> map_hessian_jets(const MapJets& mj, const std::vector<JetMat>& gamma);

/// Values of the third covariant derivative of the map, indexed so that
/// apply(X, Y, Z) = (nabla_X (nabla^2 pi))(Y, Z), a base-tangent vector.
class MapThird {
public:
  MapThird() = default;
  MapThird(int base_dim, int n) : b_(base_dim), n_(n), a_(static_cast<size_t>(base_dim) * n * n * n, 0.0) {}
  double& at(int a, int k, int l, int j) { return a_[((static_cast<size_t>(a) * n_ + k) * n_ + l) * n_ + j]; }
  double at(int a, int k, int l, int j) const { return a_[((static_cast<size_t>(a) * n_ + k) * n_ + l) * n_ + j]; }
  Eigen::VectorXd apply(const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                        const Eigen::VectorXd& Z) const;

private:
  int b_ = 0, n_ = 0;
  std::vector<double> a_;
};

MapThird map_third_values(const MapJets& mj, const std::vector<JetMat>& gamma,
                          const std::vector<JetMat>& hessian);

/// Evaluates the projector-calculus identity suite at one point with
/// rng-supplied probe vectors, accumulating frame-measured residuals.
void projector_identity_residuals(const SubmersionJets& sj, class Rng& rng,
                                  ResidualAccumulator& acc);

/// Runs the identity suite over seeded sample points of the total chart.
ResidualReport run_identity_suite(const SubmersionSpec& spec, int n_points, std::uint64_t seed,
                                  double tol);

/// Frame norm of the cyclic sum [R(X,Y),H]Z + [R(Y,Z),H]X + [R(Z,X),H]Y at p.
/// The twisted curvature [R(X,Y),H] satisfies no first-Bianchi-type identity
/// in general, and a nonzero return value witnesses that concretely.  The sum
/// does collapse to zero in special geometries: whenever all O'Neill tensors
/// vanish (product metrics), and also on any constant-curvature total space,
/// where R(X,Y)W = c(g(Y,W)X - g(X,W)Y) makes the terms cancel pairwise for
/// every g-self-adjoint projector.
double bianchi_failure_witness(const SubmersionSpec& s, const ChartPoint& p,
                               const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                               const Eigen::VectorXd& Z);

/// Largest bianchi_failure_witness value over chart-basis triples (X,Y,Z),
/// reusing an already-computed jet bundle.
double cyclic_sum_witness(const SubmersionJets& sj);

}  // namespace fibershrink
