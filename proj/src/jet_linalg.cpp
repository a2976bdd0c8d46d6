#include "fibershrink/jet_linalg.hpp"

#include <cmath>
#include <vector>

#include "fibershrink/errors.hpp"

namespace fibershrink {

JetMat jet_identity(int n) {
  JetMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = Jet3(1.0);
  return m;
}

JetMat jet_solve(const JetMat& a, const JetMat& b, double pivot_tol) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("jet_solve: shape mismatch");
  JetMat m = a;
  JetMat x = b;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(m(col, col).value());
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(m(r, col).value());
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < pivot_tol) throw SingularMetricError("jet_solve: pivot below tolerance");
    if (piv != col) {
      m.row(piv).swap(m.row(col));
      x.row(piv).swap(x.row(col));
    }
    const Jet3 inv_p = Jet3(1.0) / m(col, col);
    for (int c = col; c < n; ++c) m(col, c) = m(col, c) * inv_p;
    for (int c = 0; c < x.cols(); ++c) x(col, c) = x(col, c) * inv_p;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet3 f = m(r, col);
      if (f.vars() == 0 && f.value() == 0.0) continue;
      for (int c = col; c < n; ++c) m(r, c) = m(r, c) - f * m(col, c);
      for (int c = 0; c < x.cols(); ++c) x(r, c) = x(r, c) - f * x(col, c);
    }
  }
  return x;
}

JetMat jet_inverse(const JetMat& a, double pivot_tol) {
  return jet_solve(a, jet_identity(static_cast<int>(a.rows())), pivot_tol);
}

JetMat jet_kernel_basis(const JetMat& a, double pivot_tol) {
  const int rows = static_cast<int>(a.rows());
  const int cols = static_cast<int>(a.cols());
  JetMat m = a;
  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = r;
    double best = std::abs(m(r, c).value());
    for (int rr = r + 1; rr < rows; ++rr) {
      const double v = std::abs(m(rr, c).value());
      if (v > best) {
        best = v;
        piv = rr;
      }
    }
    if (best < pivot_tol) continue;  // free column
    if (piv != r) m.row(piv).swap(m.row(r));
    const Jet3 inv_p = Jet3(1.0) / m(r, c);
    for (int cc = 0; cc < cols; ++cc) m(r, cc) = m(r, cc) * inv_p;
    for (int rr = 0; rr < rows; ++rr) {
      if (rr == r) continue;
      const Jet3 f = m(rr, c);
      if (f.vars() == 0 && f.value() == 0.0) continue;
      for (int cc = 0; cc < cols; ++cc) m(rr, cc) = m(rr, cc) - f * m(r, cc);
    }
    pivot_col.push_back(c);
    ++r;
  }
  std::vector<bool> is_pivot(cols, false);
  for (int c : pivot_col) is_pivot[c] = true;
  const int k = cols - static_cast<int>(pivot_col.size());
  JetMat basis(cols, k);
  int out = 0;
  for (int c = 0; c < cols; ++c) {
    if (is_pivot[c]) continue;
    basis(c, out) = Jet3(1.0);
    for (int p = 0; p < static_cast<int>(pivot_col.size()); ++p)
      basis(pivot_col[p], out) = -m(p, c);
    ++out;
  }
  return basis;
}

}  // namespace fibershrink
