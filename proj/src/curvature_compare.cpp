#include "fibershrink/curvature_compare.hpp"

#include <cmath>
#include <iostream>
#include <vector>

#include <Eigen/Dense>

#include "fibershrink/errors.hpp"
#include "fibershrink/sampling.hpp"

namespace fibershrink {

namespace {

/// Everything both comparison routes need at one point, computed once.
struct VariedContext {
  ChartPoint point;
  double eps = 0.0, sh = 1.0;  // sh = 1 - eps
  double u = 1.0, c = 0.0;     // u = (1-eps)^2, c = eps(2-eps)

  SubmersionJets sj;  // unvaried projector calculus at the point

  MetricJets me;       // jets of g_eps
  Eigen::MatrixXd ge;  // values of g_eps
  Riemann4 Re;         // curvature of g_eps

  std::vector<JetMat> dgamma;           // connection difference tensor, jets
  std::vector<Eigen::MatrixXd> dgv;     // its values
  std::vector<Eigen::MatrixXd> gammav;  // values of the unvaried Christoffels

  MapJets mpj;                // projection jets (differential, pulled-back base connection)
  std::vector<JetMat> hess;   // projection Hessian jets
  MapThird third;             // third covariant derivative of the projection

  MetricJets mb;       // base metric jets at pi(p)
  Riemann4 RB;         // base curvature
  Eigen::MatrixXd gB;  // base metric values
};

VariedContext context_at(const VariedMetric& vm, const ChartPoint& p) {
  VariedContext cx;
  cx.point = p;
  cx.eps = vm.eps.eps;
  cx.sh = vm.eps.shrink();
  cx.u = cx.sh * cx.sh;
  cx.c = vm.eps.coeff();

  cx.sj = submersion_jets_at(vm.base, p);

  cx.me = metric_jets_at(vm.metric, p);
  cx.ge = values_of(cx.me.g);
  cx.Re = riemann_from_connection(connection_matrices(cx.me.gamma));

  const int n = cx.sj.total.dim();
  cx.dgamma.reserve(n);
  cx.dgv.reserve(n);
  cx.gammav.reserve(n);
  for (int i = 0; i < n; ++i) {
    cx.dgamma.push_back(cx.me.gamma[i] - cx.sj.total.gamma[i]);
    cx.dgv.push_back(values_of(cx.dgamma[i]));
    cx.gammav.push_back(values_of(cx.sj.total.gamma[i]));
  }

  cx.mpj = map_jets_at(vm.base, p);
  cx.hess = map_hessian_jets(cx.mpj, cx.sj.total.gamma);
  cx.third = map_third_values(cx.mpj, cx.sj.total.gamma, cx.hess);

  ChartPoint py{vm.base.base.chart.id, values_of(cx.sj.y)};
  cx.mb = metric_jets_at(vm.base.base, py);
  cx.RB = riemann_from_connection(connection_matrices(cx.mb.gamma));
  cx.gB = values_of(cx.mb.g);
  return cx;
}

/// Unscaled shape of the connection difference tensor,
///   dH(HX) VY + dH(HY) VX + dH(VX) VY;
/// the full difference tensor is eps(2-eps) times this.
Eigen::VectorXd difference_shape(const SubmersionJets& sj, const Eigen::VectorXd& X,
                                 const Eigen::VectorXd& Y) {
  const Eigen::VectorXd HX = sj.Hv * X, HY = sj.Hv * Y;
  const Eigen::VectorXd VX = sj.Vv * X, VY = sj.Vv * Y;
  return sj.dH(HX) * VY + sj.dH(HY) * VX + sj.dH(VX) * VY;
}

/// Contraction (A, B) -> A^j T^i_{jk} B^k of a (1,2)-tensor's values.
Eigen::VectorXd tensor12_apply(const std::vector<Eigen::MatrixXd>& T, const Eigen::VectorXd& A,
                               const Eigen::VectorXd& B) {
  const int n = static_cast<int>(T.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = A.dot(T[i] * B);
  return out;
}

/// Values of (nabla_X T)(Y, Z) for a (1,2)-tensor field given as jets, with
/// Christoffel corrections on the upper slot and both lower slots.
Eigen::VectorXd covariant12_values(const VariedContext& cx, const std::vector<JetMat>& T,
                                   const std::vector<Eigen::MatrixXd>& Tv,
                                   const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                   const Eigen::VectorXd& Z) {
  const int n = static_cast<int>(T.size());
  Eigen::VectorXd flat(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int l = 0; l < n; ++l) s += X[l] * Y.dot(d1_of(T[i], l) * Z);
    flat[i] = s;
  }
  return flat + tensor12_apply(cx.gammav, X, tensor12_apply(Tv, Y, Z)) -
         tensor12_apply(Tv, tensor12_apply(cx.gammav, X, Y), Z) -
         tensor12_apply(Tv, Y, tensor12_apply(cx.gammav, X, Z));
}

CurvatureComparison block_comparison(const VariedContext& cx, const Eigen::VectorXd& X,
                                     const Eigen::VectorXd& Y, CurvatureBlock block) {
  const SubmersionJets& sj = cx.sj;
  const int vd = sj.vdim, hd = sj.hdim;

  CurvatureComparison out;
  out.eps = cx.eps;
  out.point = cx.point;
  out.frame = sj.frame;
  out.frame.F.leftCols(vd) /= cx.sh;

  const Eigen::MatrixXd ReXY = cx.Re.apply(X, Y);
  auto scol = [&](int i) { return out.frame.F.col(i); };   // scaled frame vector
  auto col = [&](int i) { return sj.frame.F.col(i); };     // unscaled frame vector
  auto ge_pair = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (ReXY * a).dot(cx.ge * b);
  };
  auto g_of = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(sj.gv * b);
  };

  switch (block) {
    case CurvatureBlock::VV: {
      out.lhs.resize(vd, vd);
      out.rhs.resize(vd, vd);
      const Eigen::MatrixXd Rs = sj.Rsplit.apply(X, Y);
      const Eigen::MatrixXd NX = sj.dH(X), NY = sj.dH(Y);
      const Eigen::MatrixXd br = NX * NY - NY * NX;
      for (int i = 0; i < vd; ++i)
        for (int j = 0; j < vd; ++j) {
          out.lhs(i, j) = ge_pair(scol(i), scol(j));
          out.rhs(i, j) = g_of(Rs * col(i), col(j)) - cx.u * g_of(br * col(i), col(j));
        }
      break;
    }
    case CurvatureBlock::HV: {
      out.lhs.resize(hd, vd);
      out.rhs.resize(hd, vd);
      const Eigen::MatrixXd RH = sj.RHop(X, Y);
      const Eigen::MatrixXd NX = sj.dH(X), NY = sj.dH(Y);
      for (int i = 0; i < hd; ++i) {
        const Eigen::VectorXd Hi = col(vd + i);
        const Eigen::MatrixXd NHi = sj.dH(Hi);
        const Eigen::VectorXd corr = NX * (NHi * Y) - NY * (NHi * X);
        for (int j = 0; j < vd; ++j) {
          out.lhs(i, j) = ge_pair(scol(vd + i), scol(j));
          out.rhs(i, j) = cx.sh * (g_of(RH * Hi, col(j)) + cx.c * g_of(corr, col(j)));
        }
      }
      break;
    }
    case CurvatureBlock::VH: {
      out.lhs.resize(vd, hd);
      out.rhs.resize(vd, hd);
      const Eigen::MatrixXd RH = sj.RHop(X, Y);
      const Eigen::MatrixXd NX = sj.dH(X), NY = sj.dH(Y);
      for (int i = 0; i < vd; ++i) {
        const Eigen::VectorXd Vi = col(i);
        const Eigen::VectorXd corr = sj.dH(NY * Vi) * X - sj.dH(NX * Vi) * Y;
        for (int j = 0; j < hd; ++j) {
          out.lhs(i, j) = ge_pair(scol(i), scol(vd + j));
          out.rhs(i, j) = -cx.sh * (g_of(RH * Vi, col(vd + j)) + cx.c * g_of(corr, col(vd + j)));
        }
      }
      break;
    }
    case CurvatureBlock::HH: {
      out.lhs.resize(hd, hd);
      out.rhs.resize(hd, hd);
      const Eigen::MatrixXd RXY = sj.Rop(X, Y);
      const Eigen::MatrixXd RBd = cx.RB.apply(sj.dpiv * X, sj.dpiv * Y);
      for (int i = 0; i < hd; ++i)
        for (int j = 0; j < hd; ++j) {
          out.lhs(i, j) = ge_pair(scol(vd + i), scol(vd + j));
          out.rhs(i, j) =
              cx.c * (RBd * (sj.dpiv * col(vd + i))).dot(cx.gB * (sj.dpiv * col(vd + j))) +
              cx.u * g_of(RXY * col(vd + i), col(vd + j));
        }
      break;
    }
  }
  out.residual = out.lhs.size() == 0 ? 0.0 : (out.lhs - out.rhs).cwiseAbs().maxCoeff();
  return out;
}

double twisted_residual(const VariedContext& cx, const Eigen::VectorXd& X,
                        const Eigen::VectorXd& Y, ArgKind arg) {
  const SubmersionJets& sj = cx.sj;
  const Eigen::MatrixXd ReXY = cx.Re.apply(X, Y);
  const Eigen::MatrixXd ReH = ReXY * sj.Hv - sj.Hv * ReXY;
  const Eigen::MatrixXd RH = sj.RHop(X, Y);
  const Eigen::MatrixXd NX = sj.dH(X), NY = sj.dH(Y);
  const Eigen::VectorXd VX = sj.Vv * X, VY = sj.Vv * Y;
  double worst = 0.0;
  if (arg == ArgKind::Horizontal) {
    for (int i = 0; i < sj.hdim; ++i) {
      const Eigen::VectorXd W = sj.frame.F.col(sj.vdim + i);
      const Eigen::MatrixXd NW = sj.dH(W);
      const Eigen::VectorXd rhs = RH * W + cx.c * (NX * (NW * VY) - NY * (NW * VX));
      worst = std::max(worst, frame_vector_norm(sj.frame, ReH * W - rhs));
    }
  } else {
    for (int i = 0; i < sj.vdim; ++i) {
      const Eigen::VectorXd W = sj.frame.F.col(i);
      const Eigen::VectorXd rhs =
          cx.u * (RH * W + cx.c * (sj.dH(NY * W) * VX - sj.dH(NX * W) * VY));
      worst = std::max(worst, frame_vector_norm(sj.frame, ReH * W - rhs));
    }
  }
  return worst;
}

double pushforward_residual(const VariedContext& cx, const Eigen::VectorXd& X,
                            const Eigen::VectorXd& Y, const Eigen::VectorXd& Z) {
  const SubmersionJets& sj = cx.sj;
  const Eigen::VectorXd lhs = sj.dpiv * (cx.Re.apply(X, Y) * Z);
  const Eigen::VectorXd GG = difference_shape(sj, X, difference_shape(sj, Y, Z)) -
                             difference_shape(sj, Y, difference_shape(sj, X, Z));
  const Eigen::VectorXd rhs =
      cx.c * (cx.RB.apply(sj.dpiv * X, sj.dpiv * Y) * (sj.dpiv * Z)) +
      cx.u * (sj.dpiv * (sj.Rop(X, Y) * Z)) - cx.u * cx.c * (sj.dpiv * GG);
  return (lhs - rhs).norm();
}

double third_derivative_residual(const VariedContext& cx, const Eigen::VectorXd& X,
                                 const Eigen::VectorXd& Y, const Eigen::VectorXd& Z) {
  const Eigen::VectorXd lhs = cx.c * cx.third.apply(X, Y, Z);
  // The quadratic term carries 1/(eps(2-eps)): substituting the Hessian
  // balance into the Leibniz expansion of its own derivative divides one
  // factor's coefficient out.  The difference tensor is exactly zero at
  // eps = 0, so the guarded division is the removable-singularity value.
  Eigen::VectorXd inner = covariant12_values(cx, cx.dgamma, cx.dgv, X, Y, Z);
  if (cx.c != 0.0)
    inner += tensor12_apply(cx.dgv, X, tensor12_apply(cx.dgv, Y, Z)) / cx.c;
  return (lhs - cx.sj.dpiv * inner).norm();
}

double difference_curvature_residual(const VariedContext& cx, const Eigen::VectorXd& X,
                                     const Eigen::VectorXd& Y, const Eigen::VectorXd& Z) {
  const Eigen::VectorXd lhs = cx.Re.apply(X, Y) * Z;
  const Eigen::VectorXd rhs = cx.sj.Rop(X, Y) * Z +
                              covariant12_values(cx, cx.dgamma, cx.dgv, X, Y, Z) +
                              tensor12_apply(cx.dgv, X, tensor12_apply(cx.dgv, Y, Z)) -
                              covariant12_values(cx, cx.dgamma, cx.dgv, Y, X, Z) -
                              tensor12_apply(cx.dgv, Y, tensor12_apply(cx.dgv, X, Z));
  return frame_vector_norm(cx.sj.frame, lhs - rhs);
}

double exchange_residual(const VariedContext& cx, const Eigen::VectorXd& X,
                         const Eigen::VectorXd& Y, const Eigen::VectorXd& Z) {
  const SubmersionJets& sj = cx.sj;
  const Eigen::VectorXd lhs = cx.third.apply(X, Y, Z) - cx.third.apply(Y, X, Z);
  const Eigen::VectorXd rhs = cx.RB.apply(sj.dpiv * X, sj.dpiv * Y) * (sj.dpiv * Z) -
                              sj.dpiv * (sj.Rop(X, Y) * Z);
  return (lhs - rhs).norm();
}

}  // namespace

Riemann4 r_eps_direct_at(const VariedMetric& vm, const ChartPoint& p) {
  return riemann_at(vm.metric, p);
}

CurvatureComparison curvature_block_check(const VariedMetric& vm, const ChartPoint& p,
                                          const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                          CurvatureBlock block) {
  return block_comparison(context_at(vm, p), X, Y, block);
}

double twisted_curvature_check(const VariedMetric& vm, const ChartPoint& p,
                               const Eigen::VectorXd& X, const Eigen::VectorXd& Y, ArgKind arg) {
  return twisted_residual(context_at(vm, p), X, Y, arg);
}

double projector_derivative_duality_check(const SubmersionSpec& s, const ChartPoint& p,
                                          const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                          const Eigen::VectorXd& V, const Eigen::VectorXd& H) {
  SubmersionJets sj = submersion_jets_at(s, p);
  const Eigen::VectorXd Vp = sj.Vv * V, Hp = sj.Hv * H;
  const double t1 = (sj.dH(sj.dH(Y) * Vp) * X).dot(sj.gv * Hp);
  const double t2 = (sj.dH(Y) * (sj.dH(Hp) * X)).dot(sj.gv * Vp);
  return std::abs(t1 + t2);
}

double curvature_pushforward_check(const VariedMetric& vm, const ChartPoint& p,
                                   const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                   const Eigen::VectorXd& Z) {
  return pushforward_residual(context_at(vm, p), X, Y, Z);
}

double projection_third_derivative_check(const VariedMetric& vm, const ChartPoint& p,
                                         const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                         const Eigen::VectorXd& Z) {
  return third_derivative_residual(context_at(vm, p), X, Y, Z);
}

double curvature_from_difference_check(const VariedMetric& vm, const ChartPoint& p,
                                       const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                       const Eigen::VectorXd& Z) {
  return difference_curvature_residual(context_at(vm, p), X, Y, Z);
}

double third_derivative_exchange_check(const SubmersionSpec& s, const ChartPoint& p,
                                       const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                       const Eigen::VectorXd& Z) {
  // eps-free identity; a zero-shrink context supplies all the pieces.
  return exchange_residual(context_at(make_varied_metric(s, 0.0), p), X, Y, Z);
}

double curvature_pushforward_limit_check(const SubmersionSpec& s, const ChartPoint& p,
                                         const Eigen::VectorXd& X, const Eigen::VectorXd& Y,
                                         const Eigen::VectorXd& Z) {
  MapJets mj = map_jets_at(s, p);
  const Eigen::MatrixXd dpiv = values_of(mj.dpi);
  ChartPoint py{s.base.chart.id, values_of(mj.y)};
  Riemann4 RB = riemann_at(s.base, py);

  const double eps_samples[3] = {0.9, 0.99, 0.999};
  Eigen::MatrixXd samples(s.base.dim(), 3);
  Eigen::Vector3d u;
  for (int t = 0; t < 3; ++t) {
    VariedMetric vm = make_varied_metric(s, eps_samples[t]);
    Riemann4 Re = riemann_at(vm.metric, p);
    samples.col(t) = dpiv * (Re.apply(X, Y) * Z);
    u[t] = (1.0 - eps_samples[t]) * (1.0 - eps_samples[t]);
  }
  Eigen::Matrix<double, 3, 2> design;
  design.col(0).setOnes();
  design.col(1) = u;
  // Per-component least squares fit of intercept + slope * u.
  Eigen::MatrixXd coeffs = design.colPivHouseholderQr().solve(samples.transpose());
  const Eigen::VectorXd intercept = coeffs.row(0).transpose();
  const Eigen::VectorXd target = RB.apply(dpiv * X, dpiv * Y) * (dpiv * Z);
  return (intercept - target).norm();
}

void curvature_identity_residuals(const VariedMetric& vm, const ChartPoint& p, Rng& rng,
                                  ResidualAccumulator& acc) {
  VariedContext cx = context_at(vm, p);
  const int n = cx.sj.total.dim();
  const Eigen::VectorXd X = rng.vector(n, -1.0, 1.0);
  const Eigen::VectorXd Y = rng.vector(n, -1.0, 1.0);
  const Eigen::VectorXd Z = rng.vector(n, -1.0, 1.0);
  const Eigen::VectorXd W = rng.vector(n, -1.0, 1.0);

  acc.add("curvature_block_vv", block_comparison(cx, X, Y, CurvatureBlock::VV).residual, p.x);
  acc.add("curvature_block_hv", block_comparison(cx, X, Y, CurvatureBlock::HV).residual, p.x);
  acc.add("curvature_block_vh", block_comparison(cx, X, Y, CurvatureBlock::VH).residual, p.x);
  acc.add("curvature_block_hh", block_comparison(cx, X, Y, CurvatureBlock::HH).residual, p.x);
  acc.add("twisted_curvature_horizontal", twisted_residual(cx, X, Y, ArgKind::Horizontal), p.x);
  acc.add("twisted_curvature_vertical", twisted_residual(cx, X, Y, ArgKind::Vertical), p.x);
  {
    const SubmersionJets& sj = cx.sj;
    const Eigen::VectorXd Vp = sj.Vv * Z, Hp = sj.Hv * W;
    const double t1 = (sj.dH(sj.dH(Y) * Vp) * X).dot(sj.gv * Hp);
    const double t2 = (sj.dH(Y) * (sj.dH(Hp) * X)).dot(sj.gv * Vp);
    acc.add("projector_derivative_duality", std::abs(t1 + t2), p.x);
  }
  acc.add("curvature_pushforward", pushforward_residual(cx, X, Y, Z), p.x);
  acc.add("projection_third_derivative", third_derivative_residual(cx, X, Y, Z), p.x);
  acc.add("curvature_from_difference", difference_curvature_residual(cx, X, Y, Z), p.x);
  acc.add("third_derivative_exchange", exchange_residual(cx, X, Y, Z), p.x);
}

ResidualReport run_curvature_suite(const SubmersionSpec& spec, double eps, int n_points,
                                   std::uint64_t seed, double tol) {
  VariedMetric vm = make_varied_metric(spec, eps);
  ResidualAccumulator acc;
  Rng probes(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const ChartPoint& p : sample_points(spec.total.chart, n_points, seed)) {
    try {
      curvature_identity_residuals(vm, p, probes, acc);
    } catch (const FibershrinkError& e) {
      std::clog << "curvature suite: skipping point [" << p.x.transpose() << "]: " << e.what()
                << "\n";
    }
  }
  return acc.finish(tol);
}

}  // namespace fibershrink
