#include "fibershrink/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fibershrink/errors.hpp"
#include "fibershrink/jet_linalg.hpp"
#include "fibershrink/sampling.hpp"

namespace fibershrink {

Eigen::MatrixXd Riemann4::op(int k, int l) const {
  Eigen::MatrixXd m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = at(i, j, k, l);
  return m;
}

Eigen::MatrixXd Riemann4::apply(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int k = 0; k < n_; ++k) {
    if (X[k] == 0.0 && Y[k] == 0.0) continue;
    for (int l = 0; l < n_; ++l) {
      const double w = X[k] * Y[l];
      if (w == 0.0) continue;
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m(i, j) += w * at(i, j, k, l);
    }
  }
  return m;
}

Eigen::MatrixXd Nabla2::apply(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m_.front().rows(), m_.front().cols());
  for (int k = 0; k < n_; ++k)
    for (int l = 0; l < n_; ++l) {
      const double w = X[k] * Y[l];
      if (w != 0.0) out += w * at(k, l);
    }
  return out;
}

JetMat metric_at(const MetricField& m, const ChartPoint& p, int order) {
  if (p.chart_id != m.chart.id) throw DomainError("point lies on a different chart: " + p.chart_id);
  if (p.x.size() != m.dim()) throw DomainError("coordinate dimension mismatch");
  for (int i = 0; i < m.dim(); ++i) {
    if (!(p.x[i] > m.chart.lo[i] && p.x[i] < m.chart.hi[i]))
      throw DomainError("point outside chart box");
  }
  return m.eval(seed_coords(p.x, order));
}

MetricJets metric_jets_at(const MetricField& m, const ChartPoint& p, int order) {
  MetricJets out;
  out.x = seed_coords(p.x, order);
  out.g = m.eval(out.x);
  out.g_inv = jet_inverse(out.g);
  out.gamma = christoffels_from(out.g, out.g_inv);
  return out;
}

std::vector<JetMat> christoffels_from(const JetMat& g, const JetMat& g_inv) {
  const int n = static_cast<int>(g.rows());
  std::vector<JetMat> dg(n);
  for (int l = 0; l < n; ++l) dg[l] = deriv(g, l);
  std::vector<JetMat> gamma(n, JetMat(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        Jet3 s(0.0);
        for (int l = 0; l < n; ++l)
          s = s + g_inv(i, l) * (dg[j](l, k) + dg[k](j, l) - dg[l](j, k));
        s = s * 0.5;
        gamma[i](j, k) = s;
        gamma[i](k, j) = s;
      }
  return gamma;
}

std::vector<JetMat> christoffels_at(const MetricField& m, const ChartPoint& p) {
  return metric_jets_at(m, p).gamma;
}

std::vector<JetMat> connection_matrices(const std::vector<JetMat>& gamma) {
  const int n = static_cast<int>(gamma.size());
  std::vector<JetMat> A(n, JetMat(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) A[k](i, m) = gamma[i](k, m);
  return A;
}

Eigen::MatrixXd d1_of(const JetMat& m, int k) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).d1(k);
  return out;
}

Riemann4 riemann_from_connection(const std::vector<JetMat>& A) {
  const int n = static_cast<int>(A.size());
  std::vector<Eigen::MatrixXd> Av(n), dA(n * n);
  for (int k = 0; k < n; ++k) {
    Av[k] = values_of(A[k]);
    for (int l = 0; l < n; ++l) dA[k * n + l] = d1_of(A[l], k);  // d_k A_l
  }
  Riemann4 R(n);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      Eigen::MatrixXd F = dA[k * n + l] - dA[l * n + k] + Av[k] * Av[l] - Av[l] * Av[k];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          R.at(i, j, k, l) = F(i, j);
          R.at(i, j, l, k) = -F(i, j);
        }
    }
  return R;
}

Riemann4 riemann_at(const MetricField& m, const ChartPoint& p) {
  return riemann_from_connection(connection_matrices(metric_jets_at(m, p).gamma));
}

std::vector<JetMat> covariant_derivative_11(const std::vector<JetMat>& gamma, const JetMat& T) {
  const int n = static_cast<int>(gamma.size());
  std::vector<JetMat> A = connection_matrices(gamma);
  std::vector<JetMat> out(n);
  for (int k = 0; k < n; ++k) out[k] = deriv(T, k) + A[k] * T - T * A[k];
  return out;
}

Nabla2 second_covariant_derivative_11(const std::vector<JetMat>& gamma, const JetMat& T) {
  const int n = static_cast<int>(gamma.size());
  std::vector<JetMat> S = covariant_derivative_11(gamma, T);
  std::vector<Eigen::MatrixXd> Av(n), Sv(n);
  std::vector<JetMat> A = connection_matrices(gamma);
  for (int k = 0; k < n; ++k) {
    Av[k] = values_of(A[k]);
    Sv[k] = values_of(S[k]);
  }
  Nabla2 out(n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      Eigen::MatrixXd m = d1_of(S[l], k) + Av[k] * Sv[l] - Sv[l] * Av[k];
      for (int mm = 0; mm < n; ++mm) m -= gamma[mm](k, l).value() * Sv[mm];
      out.at(k, l) = m;
    }
  return out;
}

Eigen::VectorXd covariant_derivative_vec(const std::vector<JetMat>& gamma, const JetVec& W,
                                         const Eigen::VectorXd& X) {
  const int n = static_cast<int>(gamma.size());
  Eigen::VectorXd Wv = values_of(W);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    if (X[k] == 0.0) continue;
    Eigen::VectorXd dW(n);
    for (int i = 0; i < n; ++i) dW[i] = W[i].d1(k);
    Eigen::MatrixXd Ak(n, n);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) Ak(i, m) = gamma[i](k, m).value();
    out += X[k] * (dW + Ak * Wv);
  }
  return out;
}

FrameValue orthonormal_frame_at(const Eigen::MatrixXd& g, const Eigen::MatrixXd& vertical,
                                double degeneracy_tol) {
  const int n = static_cast<int>(g.rows());
  const int k = static_cast<int>(vertical.cols());
  Eigen::MatrixXd F(n, n);
  Eigen::VectorXd signs(n);
  int built = 0;
  auto project_out = [&](Eigen::VectorXd w) {
    for (int a = 0; a < built; ++a) w -= signs[a] * (F.col(a).dot(g * w)) * F.col(a);
    return w;
  };
  auto push = [&](const Eigen::VectorXd& w) {
    const double q = w.dot(g * w);
    if (std::abs(q) < degeneracy_tol)
      throw DegenerateRestrictionError("degenerate direction while building frame");
    signs[built] = (q > 0.0) ? 1.0 : -1.0;
    F.col(built) = w / std::sqrt(std::abs(q));
    ++built;
  };
  for (int c = 0; c < k; ++c) push(project_out(vertical.col(c)));
  while (built < n) {
    int best = -1;
    double best_q = 0.0;
    Eigen::VectorXd best_w;
    for (int c = 0; c < n; ++c) {
      Eigen::VectorXd w = project_out(Eigen::VectorXd::Unit(n, c));
      const double q = std::abs(w.dot(g * w));
      if (q > best_q) {
        best_q = q;
        best = c;
        best_w = w;
      }
    }
    if (best < 0 || best_q < degeneracy_tol)
      throw DegenerateRestrictionError("cannot complete frame: residual directions degenerate");
    push(best_w);
  }
  if (F.determinant() < 0.0) F.col(n - 1) *= -1.0;
  return FrameValue{F, signs};
}

Eigen::VectorXd frame_components(const FrameValue& f, const Eigen::VectorXd& v) {
  return f.F.partialPivLu().solve(v);
}

double frame_vector_norm(const FrameValue& f, const Eigen::VectorXd& v) {
  return frame_components(f, v).norm();
}

double frame_operator_norm(const FrameValue& f, const Eigen::MatrixXd& A) {
  Eigen::MatrixXd M = f.F.partialPivLu().solve(A * f.F);
  return M.jacobiSvd().singularValues()(0);
}

Eigen::VectorXd sample_in_chart(const Chart& chart, Rng& rng, double margin_frac) {
  const int n = chart.dim();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    const double width = chart.hi[i] - chart.lo[i];
    const double margin = std::max(1e-2, margin_frac * width);
    x[i] = rng.uniform(chart.lo[i] + margin, chart.hi[i] - margin);
  }
  return x;
}

std::vector<ChartPoint> sample_points(const Chart& chart, int count, std::uint64_t seed,
                                      double margin_frac) {
  Rng rng(seed);
  std::vector<ChartPoint> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back({chart.id, sample_in_chart(chart, rng, margin_frac)});
  return out;
}

}  // namespace fibershrink
