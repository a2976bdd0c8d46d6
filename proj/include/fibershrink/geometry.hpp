#pragma once

// Chart-level pseudo-Riemannian geometry on top of jet arithmetic.
//
// Index conventions used across the whole library (fixed here, nowhere else):
//   Christoffel symbols   Gamma^i_{jk} = (1/2) g^{il} (d_j g_{lk} + d_k g_{jl} - d_l g_{jk})
//   Curvature layout      R(d_k, d_l) d_j = R^i_{jkl} d_i with
//                         R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj}
//                                     + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
//   (1,1)-tensor fields   (nabla_k T)^i_j = d_k T^i_j + Gamma^i_{km} T^m_j - Gamma^m_{kj} T^i_m
//   Second derivative     nabla2_{X,Y} T = nabla_X (nabla T)(Y, .) - nabla_{nabla_X Y} T,
//                         i.e. the outer derivative acts on the first slot.
// The same curvature layout is reused verbatim for every connection handled
// here (Levi-Civita of any metric, and projected connections on subbundles),
// so curvature-sign comparisons across metrics are meaningful.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fibershrink/jet.hpp"

namespace fibershrink {

struct Chart {
  std::string id;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

struct ChartPoint {
  std::string chart_id;
  Eigen::VectorXd x;
};

/// Coordinate metric on one chart.  `eval` must accept coordinates seeded as
/// jets in any variable set (chart seeds, constants, composite maps) and
/// return the matrix of metric components as jets of the same kind.
struct MetricField {
  Chart chart;
  Eigen::VectorXi signature;  // diagonal signs of the signature, +1/-1
  std::function<JetMat(const JetVec&)> eval;
  int dim() const { return chart.dim(); }
};

/// Everything jet-valued needed at one point of one metric.
struct MetricJets {
  JetVec x;                    // seeded coordinates
  JetMat g;                    // metric components
  JetMat g_inv;                // inverse metric
  std::vector<JetMat> gamma;   // gamma[i](j,k) = Gamma^i_{jk}
  int dim() const { return static_cast<int>(g.rows()); }
};

/// Riemann tensor values R^i_{jkl} at a point (layout in the header comment).
class Riemann4 {
public:
  Riemann4() : n_(0) {}
  explicit Riemann4(int n) : n_(n), a_(static_cast<size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& at(int i, int j, int k, int l) { return a_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l]; }
  double at(int i, int j, int k, int l) const { return a_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l]; }
  /// Matrix of R(d_k, d_l) acting on tangent vectors: entry (i, j).
  Eigen::MatrixXd op(int k, int l) const;
  /// R(X, Y) as an endomorphism.
  Eigen::MatrixXd apply(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const;

private:
  int n_;
  std::vector<double> a_;
};

/// Orthonormal frame: columns of `F` are the frame vectors in chart
/// components, `signs[i]` = g(e_i, e_i) = +-1.
struct FrameValue {
  Eigen::MatrixXd F;
  Eigen::VectorXd signs;
};

JetMat metric_at(const MetricField& m, const ChartPoint& p, int order = 3);
MetricJets metric_jets_at(const MetricField& m, const ChartPoint& p, int order = 3);

/// Christoffel symbols of a metric given as jets (order drops by one).
std::vector<JetMat> christoffels_from(const JetMat& g, const JetMat& g_inv);
std::vector<JetMat> christoffels_at(const MetricField& m, const ChartPoint& p);

/// Connection coefficient matrices A_k with (A_k)^i_m = Gamma^i_{km}.
std::vector<JetMat> connection_matrices(const std::vector<JetMat>& gamma);

/// Curvature values of a connection d_k + A_k (jets of order >= 1).
Riemann4 riemann_from_connection(const std::vector<JetMat>& A);
Riemann4 riemann_at(const MetricField& m, const ChartPoint& p);

/// First-derivative values of a jet matrix, entrywise.
Eigen::MatrixXd d1_of(const JetMat& m, int k);

/// Covariant derivative of a (1,1)-tensor field given as jets: k -> nabla_k T.
std::vector<JetMat> covariant_derivative_11(const std::vector<JetMat>& gamma, const JetMat& T);

/// Values of the tensorial second covariant derivative of a (1,1) field,
/// indexed (k, l) -> matrix of (nabla2_{k,l} T)^i_j.
class Nabla2 {
public:
  Nabla2() : n_(0) {}
  explicit Nabla2(int n) : n_(n), m_(static_cast<size_t>(n) * n) {}
  int dim() const { return n_; }
  Eigen::MatrixXd& at(int k, int l) { return m_[static_cast<size_t>(k) * n_ + l]; }
  const Eigen::MatrixXd& at(int k, int l) const { return m_[static_cast<size_t>(k) * n_ + l]; }
  Eigen::MatrixXd apply(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const;

private:
  int n_;
  std::vector<Eigen::MatrixXd> m_;
};

Nabla2 second_covariant_derivative_11(const std::vector<JetMat>& gamma, const JetMat& T);

/// Values of nabla_X W for a jet vector field W and a vector X at the point.
Eigen::VectorXd covariant_derivative_vec(const std::vector<JetMat>& gamma, const JetVec& W,
                                         const Eigen::VectorXd& X);

/// Gram-Schmidt frame: vertical basis columns first (orthonormalized in the
/// given order), then completion by projecting chart basis vectors, picking
/// at each step the candidate with the largest |g(w,w)| after projection
/// (ties resolved toward the lowest chart index).  The last column is negated
/// if needed to make det(F) positive.
FrameValue orthonormal_frame_at(const Eigen::MatrixXd& g, const Eigen::MatrixXd& vertical,
                                double degeneracy_tol = 1e-12);

/// Components of v in the frame (solves F c = v).
Eigen::VectorXd frame_components(const FrameValue& f, const Eigen::VectorXd& v);
/// Euclidean norm of the frame components (signature-weighted magnitude).
double frame_vector_norm(const FrameValue& f, const Eigen::VectorXd& v);
/// Spectral norm of F^{-1} A F: operator norm measured in the frame.
double frame_operator_norm(const FrameValue& f, const Eigen::MatrixXd& A);

/// Uniform samples inside the chart box, staying a margin of
/// max(1e-2, margin_frac * width) away from each face.
std::vector<ChartPoint> sample_points(const Chart& chart, int count, std::uint64_t seed,
                                      double margin_frac = 0.05);

/// One uniform sample with the same margin policy, drawn from an open Rng.
Eigen::VectorXd sample_in_chart(const Chart& chart, class Rng& rng, double margin_frac = 0.05);

}  // namespace fibershrink
