#pragma once

// Finite-difference oracles for connection and curvature values, assembled
// purely from metric VALUES at displaced points.  These never touch the jet
// machinery, so agreement with the jet pipeline certifies both the derivative
// propagation and the index bookkeeping.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include <fibershrink/geometry.hpp>

namespace fstest {

using MetricValueFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Adapts a MetricField to a plain value function (jets seeded at order 0).
inline MetricValueFn value_fn(const fibershrink::MetricField& m) {
  return [eval = m.eval](const Eigen::VectorXd& x) {
    return fibershrink::values_of(eval(fibershrink::seed_coords(x, 0)));
  };
}

inline Eigen::MatrixXd fd_dg(const MetricValueFn& g, const Eigen::VectorXd& x, int k,
                             double h = 1e-4) {
  Eigen::VectorXd xp = x, xm = x;
  xp[k] += h;
  xm[k] -= h;
  return (g(xp) - g(xm)) / (2.0 * h);
}

inline Eigen::MatrixXd fd_d2g(const MetricValueFn& g, const Eigen::VectorXd& x, int k, int l,
                              double h = 1e-4) {
  if (k == l) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    return (g(xp) - 2.0 * g(x) + g(xm)) / (h * h);
  }
  Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
  xpp[k] += h;
  xpp[l] += h;
  xpm[k] += h;
  xpm[l] -= h;
  xmp[k] -= h;
  xmp[l] += h;
  xmm[k] -= h;
  xmm[l] -= h;
  return (g(xpp) - g(xpm) - g(xmp) + g(xmm)) / (4.0 * h * h);
}

/// Christoffel values gamma[i](j,k) from metric-value stencils.
inline std::vector<Eigen::MatrixXd> christoffels_fd(const MetricValueFn& g,
                                                    const Eigen::VectorXd& x, double h = 1e-4) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd ginv = g(x).inverse();
  std::vector<Eigen::MatrixXd> dg(n);
  for (int k = 0; k < n; ++k) dg[k] = fd_dg(g, x, k, h);
  std::vector<Eigen::MatrixXd> gamma(n, Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(i, l) * (dg[j](l, k) + dg[k](j, l) - dg[l](j, k));
        gamma[i](j, k) = 0.5 * s;
      }
  return gamma;
}

/// Curvature values R^i_{jkl} from metric-value stencils only: first and
/// second differences of g, with d(g^{-1}) = -g^{-1} (dg) g^{-1}.
inline fibershrink::Riemann4 riemann_fd(const MetricValueFn& g, const Eigen::VectorXd& x,
                                        double h = 1e-4) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd g0 = g(x);
  Eigen::MatrixXd ginv = g0.inverse();
  std::vector<Eigen::MatrixXd> dg(n), dginv(n);
  for (int k = 0; k < n; ++k) {
    dg[k] = fd_dg(g, x, k, h);
    dginv[k] = -ginv * dg[k] * ginv;
  }
  std::vector<Eigen::MatrixXd> d2g(n * n);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      d2g[k * n + l] = fd_d2g(g, x, k, l, h);
      d2g[l * n + k] = d2g[k * n + l];
    }
  // gamma[i](j,k) and its coordinate derivative dgamma[k][i](l,j).
  std::vector<Eigen::MatrixXd> gamma(n, Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(i, l) * (dg[j](l, k) + dg[k](j, l) - dg[l](j, k));
        gamma[i](j, k) = 0.5 * s;
      }
  auto dgamma = [&](int k, int i, int l, int j) {
    double s = 0.0;
    for (int m = 0; m < n; ++m) {
      s += dginv[k](i, m) * (dg[l](m, j) + dg[j](l, m) - dg[m](l, j));
      s += ginv(i, m) * (d2g[k * n + l](m, j) + d2g[k * n + j](l, m) - d2g[k * n + m](l, j));
    }
    return 0.5 * s;
  };
  fibershrink::Riemann4 R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = dgamma(k, i, l, j) - dgamma(l, i, k, j);
          for (int m = 0; m < n; ++m)
            s += gamma[i](k, m) * gamma[m](l, j) - gamma[i](l, m) * gamma[m](k, j);
          R.at(i, j, k, l) = s;
        }
  return R;
}

}  // namespace fstest
