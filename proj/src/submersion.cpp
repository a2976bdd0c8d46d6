#include "fibershrink/submersion.hpp"

#include <cmath>
#include <iostream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fibershrink/errors.hpp"
#include "fibershrink/jet_linalg.hpp"
#include "fibershrink/sampling.hpp"

namespace fibershrink {

namespace {

JetVec const_jets(const Eigen::VectorXd& v) {
  JetVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = Jet3(v[i]);
  return out;
}

Jet3 g_pair(const JetMat& g, const JetVec& a, const JetVec& b) {
  Jet3 s(0.0);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) s = s + a[i] * g(i, j) * b[j];
  return s;
}

double spectral_norm(const Eigen::MatrixXd& m) { return m.jacobiSvd().singularValues()(0); }

/// Norm for residuals of bilinear forms (both indices down): matrix of the
/// form evaluated on frame vectors.
double form_norm(const FrameValue& f, const Eigen::MatrixXd& m) {
  return spectral_norm(f.F.transpose() * m * f.F);
}

}  // namespace

Eigen::MatrixXd SubmersionJets::dH(const Eigen::VectorXd& X) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(gv.rows(), gv.cols());
  for (int k = 0; k < static_cast<int>(nablaH.size()); ++k)
    if (X[k] != 0.0) out += X[k] * values_of(nablaH[k]);
  return out;
}

Eigen::MatrixXd SubmersionJets::Rop(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const {
  return R.apply(X, Y);
}

Eigen::MatrixXd SubmersionJets::RHop(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const {
  Eigen::MatrixXd r = R.apply(X, Y);
  return r * Hv - Hv * r;
}

JetMat vertical_projector_jets(const JetMat& g, const JetMat& dpi) {
  const int n = static_cast<int>(g.rows());
  const int b = static_cast<int>(dpi.rows());
  JetMat K = jet_kernel_basis(dpi);
  if (static_cast<int>(K.cols()) != n - b)
    throw NotASubmersionError("differential does not have full rank at the sample point");
  JetMat Kt_g = K.transpose() * g;
  JetMat gram = Kt_g * K;
  JetMat W;
  try {
    W = jet_solve(gram, Kt_g);
  } catch (const SingularMetricError&) {
    throw DegenerateRestrictionError("metric restricted to the fiber tangent is degenerate");
  }
  return K * W;
}

SubmersionJets submersion_jets_at(const SubmersionSpec& spec, const ChartPoint& p) {
  SubmersionJets sj;
  sj.total = metric_jets_at(spec.total, p);
  const int n = spec.total.dim();
  const int b = spec.proj.base_dim;

  sj.y = spec.proj.eval(sj.total.x);
  if (static_cast<int>(sj.y.size()) != b) throw DomainError("projection returned wrong base dimension");
  sj.dpi = JetMat(b, n);
  for (int a = 0; a < b; ++a)
    for (int k = 0; k < n; ++k) sj.dpi(a, k) = deriv(sj.y[a], k);

  sj.vertical_basis = jet_kernel_basis(sj.dpi);
  sj.vdim = static_cast<int>(sj.vertical_basis.cols());
  sj.hdim = n - sj.vdim;
  if (sj.vdim != n - b)
    throw NotASubmersionError("differential does not have full rank at the sample point");

  sj.V = vertical_projector_jets(sj.total.g, sj.dpi);
  sj.H = jet_identity(n) - sj.V;

  sj.nablaH = covariant_derivative_11(sj.total.gamma, sj.H);
  sj.nabla2H = second_covariant_derivative_11(sj.total.gamma, sj.H);
  sj.R = riemann_from_connection(connection_matrices(sj.total.gamma));

  std::vector<JetMat> A = connection_matrices(sj.total.gamma);
  std::vector<JetMat> Asplit(n);
  for (int k = 0; k < n; ++k)
    Asplit[k] = sj.V * deriv(sj.V, k) + sj.H * deriv(sj.H, k) + sj.V * (A[k] * sj.V) +
                sj.H * (A[k] * sj.H);
  sj.Rsplit = riemann_from_connection(Asplit);

  sj.gv = values_of(sj.total.g);
  sj.Vv = values_of(sj.V);
  sj.Hv = values_of(sj.H);
  sj.dpiv = values_of(sj.dpi);
  sj.frame = orthonormal_frame_at(sj.gv, values_of(sj.vertical_basis));
  return sj;
}

MapJets map_jets_at(const SubmersionSpec& spec, const ChartPoint& p) {
  MapJets mj;
  mj.x = seed_coords(p.x, 3);
  mj.y = spec.proj.eval(mj.x);
  const int n = spec.total.dim();
  const int b = spec.proj.base_dim;
  mj.dpi = JetMat(b, n);
  for (int a = 0; a < b; ++a)
    for (int k = 0; k < n; ++k) mj.dpi(a, k) = deriv(mj.y[a], k);

  ChartPoint yp{spec.base.chart.id, values_of(mj.y)};
  MetricJets bmj = metric_jets_at(spec.base, yp);
  std::vector<Jet3> inner(mj.y.data(), mj.y.data() + b);
  mj.gammaB_pulled.assign(b, JetMat(b, b));
  for (int a = 0; a < b; ++a)
    for (int c = 0; c < b; ++c)
      for (int d = 0; d < b; ++d) mj.gammaB_pulled[a](c, d) = compose(bmj.gamma[a](c, d), inner);
  return mj;
}

std::vector<JetMat> map_hessian_jets(const MapJets& mj, const std::vector<JetMat>& gamma) {
  const int b = static_cast<int>(mj.y.size());
  const int n = static_cast<int>(mj.x.size());
  std::vector<JetMat> T(b, JetMat(n, n));
  for (int a = 0; a < b; ++a)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        Jet3 s = deriv(deriv(mj.y[a], k), l);
        for (int p = 0; p < b; ++p)
          for (int q = 0; q < b; ++q) s = s + mj.gammaB_pulled[a](p, q) * mj.dpi(p, k) * mj.dpi(q, l);
        for (int m = 0; m < n; ++m) s = s - mj.dpi(a, m) * gamma[m](k, l);
        T[a](k, l) = s;
      }
  return T;
}

Eigen::VectorXd MapThird::apply(const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                const Eigen::VectorXd& Z) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(b_);
  for (int a = 0; a < b_; ++a) {
    double s = 0.0;
    for (int k = 0; k < n_; ++k) {
      if (X[k] == 0.0) continue;
      for (int l = 0; l < n_; ++l)
        for (int j = 0; j < n_; ++j) s += X[k] * Y[l] * Z[j] * at(a, k, l, j);
    }
    out[a] = s;
  }
  return out;
}

MapThird map_third_values(const MapJets& mj, const std::vector<JetMat>& gamma,
                          const std::vector<JetMat>& hessian) {
  const int b = static_cast<int>(mj.y.size());
  const int n = static_cast<int>(mj.x.size());
  std::vector<Eigen::MatrixXd> Tv(b), gBv(b);
  for (int a = 0; a < b; ++a) {
    Tv[a] = values_of(hessian[a]);
    gBv[a] = values_of(mj.gammaB_pulled[a]);
  }
  Eigen::MatrixXd dpiv = values_of(mj.dpi);
  MapThird out(b, n);
  for (int a = 0; a < b; ++a)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j) {
          double s = hessian[a](l, j).d1(k);
          for (int p = 0; p < b; ++p)
            for (int q = 0; q < b; ++q) s += gBv[a](p, q) * dpiv(p, k) * Tv[q](l, j);
          for (int m = 0; m < n; ++m)
            s -= gamma[m](k, l).value() * Tv[a](m, j) + gamma[m](k, j).value() * Tv[a](l, m);
          out.at(a, k, l, j) = s;
        }
  return out;
}

void projector_identity_residuals(const SubmersionJets& sj, Rng& rng, ResidualAccumulator& acc) {
  const int n = static_cast<int>(sj.gv.rows());
  const Eigen::VectorXd point = values_of(sj.total.x);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const FrameValue& f = sj.frame;

  Eigen::VectorXd X = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd X2 = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd Z1 = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd Z2 = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd U1 = sj.Vv * Z1, U2 = sj.Vv * Z2;
  Eigen::VectorXd W1 = sj.Hv * Z1, W2 = sj.Hv * Z2;
  Eigen::MatrixXd NX = sj.dH(X), NX2 = sj.dH(X2);

  auto onorm = [&](const Eigen::MatrixXd& m) { return frame_operator_norm(f, m); };
  auto vnorm = [&](const Eigen::VectorXd& v) { return frame_vector_norm(f, v); };
  auto g_of = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(sj.gv * b); };

  acc.add("projector_algebra",
          std::max({onorm(sj.Vv * sj.Vv - sj.Vv), onorm(sj.Hv * sj.Hv - sj.Hv),
                    onorm(sj.Vv * sj.Hv), onorm(sj.Vv + sj.Hv - I)}),
          point);
  acc.add("projector_selfadjoint", form_norm(f, sj.gv * sj.Hv - sj.Hv.transpose() * sj.gv), point);
  acc.add("kernel_projection",
          std::max(spectral_norm(sj.dpiv * sj.Vv), spectral_norm(sj.dpiv - sj.dpiv * sj.Hv)),
          point);

  // Differentiating H annihilates fields tangent to each subbundle:
  // H (nabla_X W) = -(nabla_X H) W for vertical fields W, and the vertical
  // projection of the derivative of a horizontal field is +(nabla_X H) W.
  {
    JetVec Wf = sj.V * const_jets(Z1);
    Eigen::VectorXd cd = covariant_derivative_vec(sj.total.gamma, Wf, X);
    acc.add("leibniz_vertical", vnorm(sj.Hv * cd + NX * (sj.Vv * Z1)), point);
  }
  {
    JetVec Wf = sj.H * const_jets(Z1);
    Eigen::VectorXd cd = covariant_derivative_vec(sj.total.gamma, Wf, X);
    acc.add("leibniz_horizontal", vnorm(sj.Vv * cd - NX * (sj.Hv * Z1)), point);
  }

  acc.add("derivative_exchanges_subbundles",
          std::max(onorm(NX * sj.Vv - sj.Hv * NX), onorm(NX * sj.Hv - sj.Vv * NX)), point);
  acc.add("derivative_selfadjoint", form_norm(f, sj.gv * NX - NX.transpose() * sj.gv), point);

  Eigen::MatrixXd M2 = sj.nabla2H.apply(X, X2);
  acc.add("second_derivative_selfadjoint", form_norm(f, sj.gv * M2 - M2.transpose() * sj.gv),
          point);

  acc.add("vertical_integrability", vnorm(sj.dH(U1) * U2 - sj.dH(U2) * U1), point);
  acc.add("horizontal_antisymmetry", vnorm(sj.dH(W1) * W2 + sj.dH(W2) * W1), point);

  acc.add("second_derivative_split",
          onorm((M2 * sj.Vv - NX2 * NX) - (NX * NX2 + sj.Hv * M2)), point);
  acc.add("second_derivative_horizontal",
          vnorm(-(sj.Hv * (M2 * W1)) - (NX * NX2 + NX2 * NX) * W1), point);
  acc.add("second_derivative_vertical",
          vnorm(sj.Vv * (M2 * U1) - (NX * NX2 + NX2 * NX) * U1), point);

  // The induced connections on each subbundle preserve the restricted metric.
  {
    JetVec W1f = sj.H * const_jets(Z1), W2f = sj.H * const_jets(Z2);
    Jet3 s = g_pair(sj.total.g, W1f, W2f);
    double lhs = 0.0;
    for (int k = 0; k < n; ++k) lhs += X[k] * s.d1(k);
    double rhs = g_of(sj.Hv * covariant_derivative_vec(sj.total.gamma, W1f, X), W2) +
                 g_of(W1, sj.Hv * covariant_derivative_vec(sj.total.gamma, W2f, X));
    acc.add("induced_connection_metric_h", std::abs(lhs - rhs), point);
  }
  {
    JetVec U1f = sj.V * const_jets(Z1), U2f = sj.V * const_jets(Z2);
    Jet3 s = g_pair(sj.total.g, U1f, U2f);
    double lhs = 0.0;
    for (int k = 0; k < n; ++k) lhs += X[k] * s.d1(k);
    double rhs = g_of(sj.Vv * covariant_derivative_vec(sj.total.gamma, U1f, X), U2) +
                 g_of(U1, sj.Vv * covariant_derivative_vec(sj.total.gamma, U2f, X));
    acc.add("induced_connection_metric_v", std::abs(lhs - rhs), point);
  }

  // Curvature splits into the twisted term, the subbundle curvature, and the
  // commutator of first derivatives of H.
  Eigen::MatrixXd Rv = sj.R.apply(X, X2);
  Eigen::MatrixXd RH = Rv * sj.Hv - sj.Hv * Rv;
  Eigen::MatrixXd Rs = sj.Rsplit.apply(X, X2);
  Eigen::MatrixXd comm = NX * NX2 - NX2 * NX;
  acc.add("curvature_split_vertical", vnorm(Rv * U1 - (-RH * U1 + Rs * U1 - comm * U1)), point);
  acc.add("curvature_split_horizontal", vnorm(Rv * W1 - (RH * W1 + Rs * W1 - comm * W1)), point);
  acc.add("split_curvature_block_diagonal",
          std::max(onorm(sj.Hv * Rs * sj.Vv), onorm(sj.Vv * Rs * sj.Hv)), point);

  // Gauss equation of the fibers: all four arguments vertical, with the
  // second-fundamental-form pairing expanded via self-adjointness of dH.
  {
    Eigen::VectorXd XV1 = sj.Vv * X, XV2 = sj.Vv * X2;
    Eigen::MatrixXd NV1 = sj.dH(XV1), NV2 = sj.dH(XV2);
    acc.add("vertical_curvature_gauss",
            std::abs(g_of(sj.R.apply(XV1, XV2) * U1, U2) -
                     (g_of(sj.Rsplit.apply(XV1, XV2) * U1, U2) + g_of(NV1 * U1, NV2 * U2) -
                      g_of(NV2 * U1, NV1 * U2))),
            point);
  }

  acc.add("projector_curvature_commutator",
          onorm(sj.nabla2H.apply(X, X2) - sj.nabla2H.apply(X2, X) - RH), point);
}

ResidualReport run_identity_suite(const SubmersionSpec& spec, int n_points, std::uint64_t seed,
                                  double tol) {
  ResidualAccumulator acc;
  Rng probes(seed ^ 0x517cc1b727220a95ULL);
  for (const ChartPoint& p : sample_points(spec.total.chart, n_points, seed)) {
    try {
      SubmersionJets sj = submersion_jets_at(spec, p);
      projector_identity_residuals(sj, probes, acc);
    } catch (const FibershrinkError& e) {
      // A precondition failure at one sample is logged and skipped; residuals
      // and point counts then reflect only the evaluated points.
      std::clog << "identity suite: skipping point [" << p.x.transpose() << "]: " << e.what()
                << "\n";
    }
  }
  return acc.finish(tol);
}

namespace {

double cyclic_witness_of(const SubmersionJets& sj, const Eigen::VectorXd& X,
                         const Eigen::VectorXd& Y, const Eigen::VectorXd& Z) {
  Eigen::VectorXd s = sj.RHop(X, Y) * Z + sj.RHop(Y, Z) * X + sj.RHop(Z, X) * Y;
  return frame_vector_norm(sj.frame, s);
}

}  // namespace

double bianchi_failure_witness(const SubmersionSpec& s, const ChartPoint& p,
                               const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                               const Eigen::VectorXd& Z) {
  return cyclic_witness_of(submersion_jets_at(s, p), X, Y, Z);
}

double cyclic_sum_witness(const SubmersionJets& sj) {
  const int n = static_cast<int>(sj.gv.rows());
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        worst = std::max(worst, cyclic_witness_of(sj, Eigen::VectorXd::Unit(n, i),
                                                  Eigen::VectorXd::Unit(n, j),
                                                  Eigen::VectorXd::Unit(n, k)));
  return worst;
}

}  // namespace fibershrink
