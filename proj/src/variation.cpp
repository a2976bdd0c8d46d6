#include "fibershrink/variation.hpp"

#include <cmath>
#include <iostream>

#include <Eigen/Dense>

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

JetMat g_eps_from_jets(const SubmersionSpec& s, const JetVec& x, double eps) {
  JetMat g = s.total.eval(x);
  const int n = static_cast<int>(g.rows());
  const int b = s.proj.base_dim;
  JetVec y = s.proj.eval(x);
  JetMat dpi(b, n);
  for (int a = 0; a < b; ++a)
    for (int k = 0; k < n; ++k) dpi(a, k) = deriv(y[a], k);
  JetMat A = jet_identity(n) - vertical_projector_jets(g, dpi) * Jet3(eps);
  JetMat M = A.transpose() * (g * A);
  // Mirror the upper triangle so the result is symmetric to the last bit.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) M(j, i) = M(i, j);
  return M;
}

/// Contraction (X, Y) -> X^k Gamma^i_{km} Y^m of Christoffel-like values.
Eigen::VectorXd contract_gamma(const std::vector<Eigen::MatrixXd>& gamma,
                               const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
  const int n = static_cast<int>(gamma.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = X.dot(gamma[i] * Y);
  return out;
}

std::vector<Eigen::MatrixXd> values_of_list(const std::vector<JetMat>& jets) {
  std::vector<Eigen::MatrixXd> out(jets.size());
  for (size_t i = 0; i < jets.size(); ++i) out[i] = values_of(jets[i]);
  return out;
}

}  // namespace

VariedMetric make_varied_metric(const SubmersionSpec& s, double eps) {
  if (!(1.0 - eps > 1e-6))
    throw SingularMetricError("varied metric requires 1 - eps > 1e-6 to stay invertible");
  VariedMetric vm;
  vm.base = s;
  vm.eps = EpsilonParam{eps};
  vm.metric.chart = s.total.chart;
  vm.metric.signature = s.total.signature;
  vm.metric.eval = [s, eps](const JetVec& x) { return g_eps_from_jets(s, x, eps); };
  return vm;
}

JetMat g_eps_at(const VariedMetric& vm, const ChartPoint& p, int order) {
  return metric_at(vm.metric, p, order);
}

std::vector<JetMat> gamma_eps_jets_at(const VariedMetric& vm, const ChartPoint& p) {
  MetricJets varied = metric_jets_at(vm.metric, p);
  MetricJets plain = metric_jets_at(vm.base.total, p);
  std::vector<JetMat> out(varied.gamma.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = varied.gamma[i] - plain.gamma[i];
  return out;
}

std::vector<Eigen::MatrixXd> gamma_eps_direct_at(const VariedMetric& vm, const ChartPoint& p) {
  return values_of_list(gamma_eps_jets_at(vm, p));
}

Eigen::VectorXd gamma_eps_formula(const SubmersionJets& sj, double eps, const Eigen::VectorXd& X,
                                  const Eigen::VectorXd& Y) {
  Eigen::VectorXd VX = sj.Vv * X, VY = sj.Vv * Y;
  Eigen::VectorXd HX = sj.Hv * X, HY = sj.Hv * Y;
  return EpsilonParam{eps}.coeff() * (sj.dH(HX) * VY + sj.dH(HY) * VX + sj.dH(VX) * VY);
}

Eigen::VectorXd gamma_eps_formula_at(const VariedMetric& vm, const ChartPoint& p,
                                     const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
  return gamma_eps_formula(submersion_jets_at(vm.base, p), vm.eps.eps, X, Y);
}

namespace {

double metric_derivative_residual(const SubmersionJets& sj, const JetMat& g_eps_jets, double coeff,
                                  const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                  const Eigen::VectorXd& Z) {
  const int n = static_cast<int>(sj.gv.rows());
  Eigen::MatrixXd Gev = values_of(g_eps_jets);
  std::vector<Eigen::MatrixXd> gamma = values_of_list(sj.total.gamma);

  Jet3 s = g_pair(g_eps_jets, const_jets(Y), const_jets(Z));
  double lhs = 0.0;
  for (int k = 0; k < n; ++k) lhs += X[k] * s.d1(k);
  lhs -= (contract_gamma(gamma, X, Y)).dot(Gev * Z) + Y.dot(Gev * contract_gamma(gamma, X, Z));

  double rhs = coeff * Y.dot(sj.gv * (sj.dH(X) * Z));
  return std::abs(lhs - rhs);
}

}  // namespace

double varied_metric_derivative_check(const VariedMetric& vm, const ChartPoint& p,
                                      const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                      const Eigen::VectorXd& Z) {
  SubmersionJets sj = submersion_jets_at(vm.base, p);
  return metric_derivative_residual(sj, g_eps_at(vm, p), vm.eps.coeff(), X, Y, Z);
}

Eigen::VectorXd projection_hessian_at(const SubmersionSpec& s, const ChartPoint& p,
                                      const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
  MapJets mj = map_jets_at(s, p);
  std::vector<JetMat> hess = map_hessian_jets(mj, christoffels_at(s.total, p));
  Eigen::VectorXd out(hess.size());
  for (size_t a = 0; a < hess.size(); ++a) out[a] = X.dot(values_of(hess[a]) * Y);
  return out;
}

double projection_hessian_check(const SubmersionSpec& s, double eps, const ChartPoint& p,
                                const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
  SubmersionJets sj = submersion_jets_at(s, p);
  Eigen::VectorXd lhs = EpsilonParam{eps}.coeff() * projection_hessian_at(s, p, X, Y);
  Eigen::VectorXd rhs = sj.dpiv * gamma_eps_formula(sj, eps, X, Y);
  return (lhs - rhs).lpNorm<Eigen::Infinity>();
}

void variation_identity_residuals(const VariedMetric& vm, const ChartPoint& p, Rng& rng,
                                  ResidualAccumulator& acc) {
  const SubmersionSpec& s = vm.base;
  const double sh2 = vm.eps.shrink() * vm.eps.shrink();
  const double coeff = vm.eps.coeff();

  SubmersionJets sj = submersion_jets_at(s, p);
  MetricJets varied = metric_jets_at(vm.metric, p);
  const int n = static_cast<int>(sj.gv.rows());
  const Eigen::VectorXd point = values_of(sj.total.x);
  const FrameValue& f = sj.frame;

  Eigen::VectorXd X = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd X2 = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd Z1 = rng.vector(n, -1.0, 1.0);
  Eigen::VectorXd Z2 = rng.vector(n, -1.0, 1.0);

  auto onorm = [&](const Eigen::MatrixXd& m) { return frame_operator_norm(f, m); };
  auto vnorm = [&](const Eigen::VectorXd& v) { return frame_vector_norm(f, v); };

  Eigen::MatrixXd Gev = values_of(varied.g);

  // Block values: horizontal pairings unchanged, vertical pairings scaled by
  // (1-eps)^2, the two subbundles still orthogonal.
  {
    double rh = std::abs(X.dot(Gev * (sj.Hv * Z1)) - X.dot(sj.gv * (sj.Hv * Z1)));
    double rv = std::abs(X.dot(Gev * (sj.Vv * Z1)) - sh2 * X.dot(sj.gv * (sj.Vv * Z1)));
    double ro = std::abs((sj.Hv * X).dot(Gev * (sj.Vv * Z2)));
    acc.add("varied_metric_blocks", std::max({rh, rv, ro}), point);
  }

  // The projector fields of g_eps coincide with those of g.
  {
    Eigen::MatrixXd Vev = values_of(vertical_projector_jets(varied.g, sj.dpi));
    acc.add("varied_projector_match", onorm(Vev - sj.Vv), point);
  }

  std::vector<Eigen::MatrixXd> gd(varied.gamma.size());
  for (size_t i = 0; i < gd.size(); ++i)
    gd[i] = values_of(varied.gamma[i]) - values_of(sj.total.gamma[i]);

  acc.add("difference_tensor_routes",
          vnorm(contract_gamma(gd, X, X2) - gamma_eps_formula(sj, vm.eps.eps, X, X2)), point);
  acc.add("difference_tensor_symmetric",
          vnorm(gamma_eps_formula(sj, vm.eps.eps, X, X2) - gamma_eps_formula(sj, vm.eps.eps, X2, X)),
          point);
  acc.add("difference_tensor_horizontal", vnorm(sj.Vv * contract_gamma(gd, X, X2)), point);

  acc.add("varied_metric_derivative",
          metric_derivative_residual(sj, varied.g, coeff, X, Z1, Z2), point);

  // Projection Hessian balances against the pushed-forward difference tensor.
  {
    MapJets mj = map_jets_at(s, p);
    std::vector<JetMat> hess = map_hessian_jets(mj, sj.total.gamma);
    Eigen::VectorXd lhs(hess.size());
    for (size_t a = 0; a < hess.size(); ++a) lhs[a] = coeff * X.dot(values_of(hess[a]) * X2);
    Eigen::VectorXd rhs = sj.dpiv * gamma_eps_formula(sj, vm.eps.eps, X, X2);
    acc.add("projection_hessian_balance", (lhs - rhs).lpNorm<Eigen::Infinity>(), point);
  }

  // Derivatives of the same projector field along both connections: equal on
  // horizontal outputs, scaled on vertical ones, and quadratic expressions
  // scale uniformly.
  {
    std::vector<JetMat> nablaH_eps = covariant_derivative_11(varied.gamma, sj.H);
    auto dHe = [&](const Eigen::VectorXd& D) {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
      for (int k = 0; k < n; ++k)
        if (D[k] != 0.0) out += D[k] * values_of(nablaH_eps[k]);
      return out;
    };
    Eigen::MatrixXd NeX = dHe(X), NeX2 = dHe(X2);
    Eigen::MatrixXd NX = sj.dH(X), NX2 = sj.dH(X2);
    acc.add("varied_connection_horizontal", onorm((NeX - NX) * sj.Hv), point);
    acc.add("varied_connection_vertical", onorm((NeX - sh2 * NX) * sj.Vv), point);
    acc.add("varied_connection_product", onorm(NeX * NeX2 - sh2 * (NX * NX2)), point);
    acc.add("varied_connection_bracket",
            onorm((NeX * NeX2 - NeX2 * NeX) - sh2 * (NX * NX2 - NX2 * NX)), point);
  }
}

ResidualReport run_variation_suite(const SubmersionSpec& spec, double eps, int n_points,
                                   std::uint64_t seed, double tol) {
  VariedMetric vm = make_varied_metric(spec, eps);
  ResidualAccumulator acc;
  Rng probes(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const ChartPoint& p : sample_points(spec.total.chart, n_points, seed)) {
    try {
      variation_identity_residuals(vm, p, probes, acc);
    } catch (const FibershrinkError& e) {
      std::clog << "variation suite: skipping point [" << p.x.transpose() << "]: " << e.what()
                << "\n";
    }
  }
  return acc.finish(tol);
}

}  // namespace fibershrink
