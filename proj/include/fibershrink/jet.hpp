#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "fibershrink/errors.hpp"

namespace fibershrink {

/// Truncated Taylor scalar: value plus plain (unnormalized) partial
/// derivatives up to third order in at most kMaxVars variables.
///
/// Storage is dense with symmetric packing: second partials are kept for
/// index pairs i <= j, third partials for triples i <= j <= k.  The packed
/// ordinal of a pair or triple does not depend on the variable count, so a
/// jet in fewer variables simply leaves the upper lanes at exact zero.  That
/// invariant (inactive lanes are zero) lets linear operations run over the
/// full fixed-size arrays.
///
/// A jet with vars() == 0 is a broadcastable constant: it combines with jets
/// of any variable count.  order() tracks how many derivative levels are
/// trustworthy; taking a partial-derivative shift (deriv) loses one level.
class Jet3 {
public:
  static constexpr int kMaxVars = 7;
  static constexpr int kN1 = kMaxVars;
  static constexpr int kN2 = kMaxVars * (kMaxVars + 1) / 2;
  static constexpr int kN3 = kMaxVars * (kMaxVars + 1) * (kMaxVars + 2) / 6;

  Jet3() : Jet3(0.0) {}
  Jet3(double v) : dim_(0), ord_(3), c0_(v) {  // NOLINT: implicit wanted
    c1_.setZero();
    c2_.setZero();
    c3_.setZero();
  }

  /// Coordinate seed: value v in slot `index` of an `n_vars`-variable chart.
  static Jet3 variable(int index, double v, int n_vars, int order = 3) {
    if (n_vars < 1 || n_vars > kMaxVars || index < 0 || index >= n_vars)
      throw std::invalid_argument("Jet3::variable: index/vars out of range");
    if (order < 0 || order > 3) throw std::invalid_argument("Jet3::variable: order must be 0..3");
    Jet3 j(v);
    j.dim_ = n_vars;
    j.ord_ = order;
    if (order >= 1) j.c1_[index] = 1.0;  // order 0 seeds carry values only
    return j;
  }

  static Jet3 constant(double v) { return Jet3(v); }

  int vars() const { return dim_; }
  int order() const { return ord_; }
  double value() const { return c0_; }
  double d1(int i) const { return c1_[i]; }
  double d2(int i, int j) const { return c2_[idx2(i, j)]; }
  double d3(int i, int j, int k) const { return c3_[idx3(i, j, k)]; }

  /// Packed ordinal of an unordered pair {i, j}.
  static int idx2(int i, int j) {
    if (i > j) std::swap(i, j);
    return i + j * (j + 1) / 2;
  }

  /// Packed ordinal of an unordered triple {i, j, k}.
  static int idx3(int i, int j, int k) {
    if (i > j) std::swap(i, j);
    if (j > k) std::swap(j, k);
    if (i > j) std::swap(i, j);
    return i + j * (j + 1) / 2 + k * (k + 1) * (k + 2) / 6;
  }

  friend Jet3 operator+(const Jet3& a, const Jet3& b) {
    auto [dim, ord] = meet(a, b);
    Jet3 r;
    r.dim_ = dim;
    r.ord_ = ord;
    r.c0_ = a.c0_ + b.c0_;
    r.c1_ = a.c1_ + b.c1_;
    r.c2_ = a.c2_ + b.c2_;
    r.c3_ = a.c3_ + b.c3_;
    if (a.ord_ != b.ord_) r.trim();
    return r;
  }

  friend Jet3 operator-(const Jet3& a, const Jet3& b) {
    auto [dim, ord] = meet(a, b);
    Jet3 r;
    r.dim_ = dim;
    r.ord_ = ord;
    r.c0_ = a.c0_ - b.c0_;
    r.c1_ = a.c1_ - b.c1_;
    r.c2_ = a.c2_ - b.c2_;
    r.c3_ = a.c3_ - b.c3_;
    if (a.ord_ != b.ord_) r.trim();
    return r;
  }

  friend Jet3 operator-(const Jet3& a) {
    Jet3 r = a;
    r.c0_ = -r.c0_;
    r.c1_ = -r.c1_;
    r.c2_ = -r.c2_;
    r.c3_ = -r.c3_;
    return r;
  }

  friend Jet3 operator*(const Jet3& a, const Jet3& b) {
    if (a.dim_ == 0) return scaled(b, a.c0_, b.ord_ < a.ord_ ? b.ord_ : a.ord_);
    if (b.dim_ == 0) return scaled(a, b.c0_, a.ord_ < b.ord_ ? a.ord_ : b.ord_);
    auto [dim, ord] = meet(a, b);
    Jet3 r;
    r.dim_ = dim;
    r.ord_ = ord;
    r.c0_ = a.c0_ * b.c0_;
    if (ord >= 1) {
      for (int i = 0; i < dim; ++i) r.c1_[i] = a.c1_[i] * b.c0_ + a.c0_ * b.c1_[i];
    }
    if (ord >= 2) {
      for (int j = 0; j < dim; ++j)
        for (int i = 0; i <= j; ++i) {
          const int p = idx2(i, j);
          r.c2_[p] = a.c2_[p] * b.c0_ + a.c0_ * b.c2_[p] + a.c1_[i] * b.c1_[j] + a.c1_[j] * b.c1_[i];
        }
    }
    if (ord >= 3) {
      for (int k = 0; k < dim; ++k)
        for (int j = 0; j <= k; ++j)
          for (int i = 0; i <= j; ++i) {
            const int q = idx3(i, j, k);
            const int ij = idx2(i, j), ik = idx2(i, k), jk = idx2(j, k);
            r.c3_[q] = a.c3_[q] * b.c0_ + a.c0_ * b.c3_[q] + a.c2_[ij] * b.c1_[k] +
                       a.c2_[ik] * b.c1_[j] + a.c2_[jk] * b.c1_[i] + a.c1_[i] * b.c2_[jk] +
                       a.c1_[j] * b.c2_[ik] + a.c1_[k] * b.c2_[ij];
          }
    }
    return r;
  }

  friend Jet3 operator/(const Jet3& a, const Jet3& b) {
    if (b.dim_ == 0) {
      if (std::abs(b.c0_) < std::numeric_limits<double>::min())
        throw SingularPointError("Jet3: division by zero constant");
      return scaled(a, 1.0 / b.c0_, a.ord_ < b.ord_ ? a.ord_ : b.ord_);
    }
    return a * reciprocal(b);
  }

  friend Jet3 operator+(const Jet3& a, double s) { Jet3 r = a; r.c0_ += s; return r; }
  friend Jet3 operator+(double s, const Jet3& a) { return a + s; }
  friend Jet3 operator-(const Jet3& a, double s) { Jet3 r = a; r.c0_ -= s; return r; }
  friend Jet3 operator-(double s, const Jet3& a) { return (-a) + s; }
  friend Jet3 operator*(const Jet3& a, double s) { return scaled(a, s, a.ord_); }
  friend Jet3 operator*(double s, const Jet3& a) { return scaled(a, s, a.ord_); }
  friend Jet3 operator/(const Jet3& a, double s) {
    if (std::abs(s) < std::numeric_limits<double>::min())
      throw SingularPointError("Jet3: division by zero constant");
    return scaled(a, 1.0 / s, a.ord_);
  }
  friend Jet3 operator/(double s, const Jet3& a) { return Jet3(s) / a; }

  Jet3& operator+=(const Jet3& b) { *this = *this + b; return *this; }
  Jet3& operator-=(const Jet3& b) { *this = *this - b; return *this; }
  Jet3& operator*=(const Jet3& b) { *this = *this * b; return *this; }
  Jet3& operator/=(const Jet3& b) { *this = *this / b; return *this; }

  friend bool operator==(const Jet3& a, const Jet3& b) {
    return a.c0_ == b.c0_ && a.c1_ == b.c1_ && a.c2_ == b.c2_ && a.c3_ == b.c3_;
  }
  friend bool operator!=(const Jet3& a, const Jet3& b) { return !(a == b); }

  /// Composition with a univariate function given its derivatives at value().
  friend Jet3 compose1(const Jet3& f, double d0, double d1v, double d2v, double d3v) {
    Jet3 r;
    r.dim_ = f.dim_;
    r.ord_ = f.ord_;
    r.c0_ = d0;
    const int dim = f.dim_;
    if (r.ord_ >= 1) {
      for (int i = 0; i < dim; ++i) r.c1_[i] = d1v * f.c1_[i];
    }
    if (r.ord_ >= 2) {
      for (int j = 0; j < dim; ++j)
        for (int i = 0; i <= j; ++i) {
          const int p = idx2(i, j);
          r.c2_[p] = d2v * f.c1_[i] * f.c1_[j] + d1v * f.c2_[p];
        }
    }
    if (r.ord_ >= 3) {
      for (int k = 0; k < dim; ++k)
        for (int j = 0; j <= k; ++j)
          for (int i = 0; i <= j; ++i) {
            const int q = idx3(i, j, k);
            r.c3_[q] = d3v * f.c1_[i] * f.c1_[j] * f.c1_[k] +
                       d2v * (f.c2_[idx2(i, j)] * f.c1_[k] + f.c2_[idx2(i, k)] * f.c1_[j] +
                              f.c2_[idx2(j, k)] * f.c1_[i]) +
                       d1v * f.c3_[q];
          }
    }
    return r;
  }

  /// Partial-derivative shift: the jet of (d f / d x_i), one order lower.
  friend Jet3 deriv(const Jet3& f, int i) {
    if (f.dim_ == 0) return Jet3(0.0);
    if (i < 0 || i >= f.dim_) throw std::invalid_argument("deriv: variable index out of range");
    if (f.ord_ < 1) throw std::logic_error("deriv: jet carries no derivative information");
    Jet3 r;
    r.dim_ = f.dim_;
    r.ord_ = f.ord_ - 1;
    r.c0_ = f.c1_[i];
    if (r.ord_ >= 1)
      for (int j = 0; j < f.dim_; ++j) r.c1_[j] = f.c2_[idx2(i, j)];
    if (r.ord_ >= 2)
      for (int k = 0; k < f.dim_; ++k)
        for (int j = 0; j <= k; ++j) r.c2_[idx2(j, k)] = f.c3_[idx3(i, j, k)];
    return r;
  }

  /// Multivariate composition h(a_1, ..., a_m) where h is a jet in m
  /// variables seeded at (a_1.value(), ..., a_m.value()).
  friend Jet3 compose(const Jet3& h, const std::vector<Jet3>& a) {
    const int m = h.dim_;
    if (m == 0) {
      Jet3 r(h.c0_);
      return r;
    }
    if (static_cast<int>(a.size()) != m)
      throw std::invalid_argument("compose: argument count does not match inner variable count");
    int dim = 0, ord = h.ord_;
    for (const Jet3& ai : a) {
      if (ai.dim_ != 0) {
        if (dim != 0 && ai.dim_ != dim) throw std::logic_error("compose: mixed variable counts");
        dim = ai.dim_;
      }
      ord = std::min(ord, ai.ord_);
    }
    Jet3 r;
    r.dim_ = dim;
    r.ord_ = ord;
    r.c0_ = h.c0_;
    if (dim == 0 || ord == 0) return r;
    for (int i = 0; i < dim; ++i) {
      double s = 0;
      for (int p = 0; p < m; ++p) s += h.c1_[p] * a[p].c1_[i];
      r.c1_[i] = s;
    }
    if (ord >= 2) {
      for (int j = 0; j < dim; ++j)
        for (int i = 0; i <= j; ++i) {
          double s = 0;
          for (int p = 0; p < m; ++p) s += h.c1_[p] * a[p].c2_[idx2(i, j)];
          for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q) s += h.c2_[idx2(p, q)] * a[p].c1_[i] * a[q].c1_[j];
          r.c2_[idx2(i, j)] = s;
        }
    }
    if (ord >= 3) {
      for (int k = 0; k < dim; ++k)
        for (int j = 0; j <= k; ++j)
          for (int i = 0; i <= j; ++i) {
            double s = 0;
            for (int p = 0; p < m; ++p) s += h.c1_[p] * a[p].c3_[idx3(i, j, k)];
            for (int p = 0; p < m; ++p)
              for (int q = 0; q < m; ++q)
                s += h.c2_[idx2(p, q)] * (a[p].c2_[idx2(i, j)] * a[q].c1_[k] +
                                          a[p].c2_[idx2(i, k)] * a[q].c1_[j] +
                                          a[p].c2_[idx2(j, k)] * a[q].c1_[i]);
            for (int p = 0; p < m; ++p)
              for (int q = 0; q < m; ++q)
                for (int t = 0; t < m; ++t)
                  s += h.c3_[idx3(p, q, t)] * a[p].c1_[i] * a[q].c1_[j] * a[t].c1_[k];
            r.c3_[idx3(i, j, k)] = s;
          }
    }
    return r;
  }

private:
  static std::pair<int, int> meet(const Jet3& a, const Jet3& b) {
    int dim;
    if (a.dim_ == 0)
      dim = b.dim_;
    else if (b.dim_ == 0 || b.dim_ == a.dim_)
      dim = a.dim_;
    else
      throw std::logic_error("Jet3: combining jets with different variable counts");
    return {dim, a.ord_ < b.ord_ ? a.ord_ : b.ord_};
  }

  static Jet3 scaled(const Jet3& a, double s, int ord) {
    Jet3 r;
    r.dim_ = a.dim_;
    r.ord_ = ord;
    r.c0_ = a.c0_ * s;
    r.c1_ = a.c1_ * s;
    r.c2_ = a.c2_ * s;
    r.c3_ = a.c3_ * s;
    if (ord != a.ord_) r.trim();
    return r;
  }

  static Jet3 reciprocal(const Jet3& b) {
    const double v = b.c0_;
    if (std::abs(v) < std::numeric_limits<double>::min())
      throw SingularPointError("Jet3: division by jet with zero value");
    const double iv = 1.0 / v;
    return compose1(b, iv, -iv * iv, 2.0 * iv * iv * iv, -6.0 * iv * iv * iv * iv);
  }

  void trim() {
    if (ord_ < 3) c3_.setZero();
    if (ord_ < 2) c2_.setZero();
    if (ord_ < 1) c1_.setZero();
  }

  int dim_;
  int ord_;
  double c0_;
  Eigen::Matrix<double, kN1, 1> c1_;
  Eigen::Matrix<double, kN2, 1> c2_;
  Eigen::Matrix<double, kN3, 1> c3_;
};

inline Jet3 sin(const Jet3& f) {
  const double s = std::sin(f.value()), c = std::cos(f.value());
  return compose1(f, s, c, -s, -c);
}

inline Jet3 cos(const Jet3& f) {
  const double s = std::sin(f.value()), c = std::cos(f.value());
  return compose1(f, c, -s, -c, s);
}

inline Jet3 exp(const Jet3& f) {
  const double e = std::exp(f.value());
  return compose1(f, e, e, e, e);
}

inline Jet3 sqrt(const Jet3& f) {
  const double v = f.value();
  if (v <= 0.0) throw DomainError("Jet3: sqrt of nonpositive value");
  const double r = std::sqrt(v);
  return compose1(f, r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v));
}

/// Integer power by repeated multiplication (negative exponents go through
/// the reciprocal, so they need a nonzero value).
inline Jet3 pow(const Jet3& f, int n) {
  if (n < 0) return Jet3(1.0) / pow(f, -n);
  Jet3 r(1.0);
  Jet3 base = f;
  int e = n;
  while (e > 0) {
    if (e & 1) r = r * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return r;
}

/// Plain partial derivative named by a tuple of variable indices (length 0-3).
inline double extract_partial(const Jet3& f, std::initializer_list<int> idx) {
  const auto n = idx.size();
  if (n > 3) throw std::invalid_argument("extract_partial: tuple length exceeds stored order");
  if (static_cast<int>(n) > f.order())
    throw std::logic_error("extract_partial: jet order too low for requested partial");
  auto it = idx.begin();
  switch (n) {
    case 0: return f.value();
    case 1: return f.d1(*it);
    case 2: { int i = *it++; return f.d2(i, *it); }
    default: { int i = *it++; int j = *it++; return f.d3(i, j, *it); }
  }
}

// Adapters required by Eigen's scalar concept.
inline const Jet3& conj(const Jet3& x) { return x; }
inline const Jet3& real(const Jet3& x) { return x; }
inline Jet3 imag(const Jet3&) { return Jet3(0.0); }
inline Jet3 abs(const Jet3& x) { return x.value() < 0.0 ? -x : x; }
inline Jet3 abs2(const Jet3& x) { return x * x; }

}  // namespace fibershrink

namespace Eigen {

template <>
struct NumTraits<fibershrink::Jet3> : NumTraits<double> {
  typedef fibershrink::Jet3 Real;
  typedef fibershrink::Jet3 NonInteger;
  typedef fibershrink::Jet3 Nested;
  typedef double Literal;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 30,
    MulCost = 120,
  };
  static inline Real epsilon() { return Real(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(NumTraits<double>::dummy_precision()); }
  static inline Real highest() { return Real(NumTraits<double>::highest()); }
  static inline Real lowest() { return Real(NumTraits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<fibershrink::Jet3, double, BinaryOp> {
  typedef fibershrink::Jet3 ReturnType;
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, fibershrink::Jet3, BinaryOp> {
  typedef fibershrink::Jet3 ReturnType;
};

}  // namespace Eigen

namespace fibershrink {

using JetVec = Eigen::Matrix<Jet3, Eigen::Dynamic, 1>;
using JetMat = Eigen::Matrix<Jet3, Eigen::Dynamic, Eigen::Dynamic>;

/// Coordinate seeds for a chart point: component i becomes variable i.
inline JetVec seed_coords(const Eigen::VectorXd& x, int order = 3) {
  const int n = static_cast<int>(x.size());
  JetVec out(n);
  for (int i = 0; i < n; ++i) out(i) = Jet3::variable(i, x(i), n, order);
  return out;
}

inline Eigen::VectorXd values_of(const JetVec& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(i).value();
  return out;
}

inline Eigen::MatrixXd values_of(const JetMat& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = m(i, j).value();
  return out;
}

/// Entrywise partial-derivative shift of a jet matrix.
inline JetMat deriv(const JetMat& m, int k) {
  JetMat out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = deriv(m(i, j), k);
  return out;
}

inline JetVec deriv(const JetVec& v, int k) {
  JetVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = deriv(v(i), k);
  return out;
}

}  // namespace fibershrink
