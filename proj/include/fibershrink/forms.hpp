#pragma once

// Exterior algebra at a point and the curvature two-form calculus built on
// it: frame-measured curvature form matrices for a metric, a submersion, or
// the fiber-scaled metric, Pfaffians, the normalized Euler form, and
// pullback of pointwise forms through the projection.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fibershrink/geometry.hpp"
#include "fibershrink/submersion.hpp"
#include "fibershrink/variation.hpp"

namespace fibershrink {

/// Alternating form at a point, stored densely on the strictly increasing
/// coordinate index tuples of one degree (tuple <-> bitmask of indices).
class ExteriorForm {
public:
  ExteriorForm() = default;
  /// Zero form of the given degree on an n-dimensional cotangent space.
  ExteriorForm(int dim, int degree);

  /// Degree-0 form with the given value.
  static ExteriorForm constant(int dim, double value);
  /// Coordinate form dx^{i1} ^ ... ^ dx^{id} for strictly increasing indices.
  static ExteriorForm coordinate(int dim, const std::vector<int>& indices);

  int dim() const { return dim_; }
  int degree() const { return degree_; }

  /// Coefficient on a strictly increasing index tuple (0 when the tuple has
  /// the wrong length).
  double coeff(const std::vector<int>& indices) const;
  void set_coeff(const std::vector<int>& indices, double value);

  /// Coefficient addressed by index bitmask; popcount must equal the degree.
  double coeff_mask(std::uint32_t mask) const { return c_[mask]; }
  void add_mask(std::uint32_t mask, double value) { c_[mask] += value; }

  double max_abs_coeff() const;

  /// Value on `degree` tangent vectors of matching dimension.
  double evaluate(const std::vector<Eigen::VectorXd>& args) const;

  /// Nonzero coefficients as (increasing tuple, value), tuple-ordered.
  std::vector<std::pair<std::vector<int>, double>> entries() const;

  ExteriorForm& operator+=(const ExteriorForm& o);
  ExteriorForm& operator-=(const ExteriorForm& o);
  ExteriorForm& operator*=(double s);
  friend ExteriorForm operator+(ExteriorForm a, const ExteriorForm& b) { return a += b; }
  friend ExteriorForm operator-(ExteriorForm a, const ExteriorForm& b) { return a -= b; }
  friend ExteriorForm operator*(double s, ExteriorForm a) { return a *= s; }
  friend ExteriorForm operator*(ExteriorForm a, double s) { return a *= s; }

private:
  int dim_ = 0;
  int degree_ = 0;
  std::vector<double> c_;  // size 1 << dim, nonzero only where popcount == degree
};

/// Graded product; degrees add, overflow past the dimension gives the zero
/// form of clamped degree.
ExteriorForm wedge(const ExteriorForm& a, const ExteriorForm& b);

/// Debug dump: {"degree": d, "entries": [[[indices...], coefficient], ...]}.
std::string to_json_string(const ExteriorForm& f);

/// Dense matrix of forms sharing one cotangent dimension and one degree.
class FormMatrix {
public:
  FormMatrix() = default;
  FormMatrix(int rows, int cols, int dim, int degree);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int dim() const { return dim_; }
  int degree() const { return degree_; }

  ExteriorForm& at(int i, int j) { return e_[static_cast<size_t>(i) * cols_ + j]; }
  const ExteriorForm& at(int i, int j) const { return e_[static_cast<size_t>(i) * cols_ + j]; }

  FormMatrix block(int row0, int col0, int nrows, int ncols) const;
  double max_abs_coeff() const;

private:
  int rows_ = 0, cols_ = 0, dim_ = 0, degree_ = 0;
  std::vector<ExteriorForm> e_;
};

/// Curvature two-forms measured in an orthonormal frame:
///   omega(i, j) = signs[i] * <R(., .) e_j, e_i>
/// with the metric and curvature of the chosen source.  The frame is
/// vertical-first for submersion sources; for the fiber-scaled metric the
/// vertical columns are divided by 1 - eps so the frame stays orthonormal.
struct CurvatureFormMatrix {
  FrameValue frame;
  int vdim = 0;    // leading frame columns spanning the fiber directions
  double eps = 0.0;
  FormMatrix omega;
  int n() const { return static_cast<int>(frame.F.cols()); }
};

/// Top-left vdim x vdim block (fiber-facing pairings).
FormMatrix vertical_block(const CurvatureFormMatrix& c);
/// Bottom-right (n - vdim) x (n - vdim) block (base-facing pairings).
FormMatrix horizontal_block(const CurvatureFormMatrix& c);
/// Top-right vdim x (n - vdim) block (cross pairings).
FormMatrix mixed_block(const CurvatureFormMatrix& c);

/// Curvature form of a plain metric in its Gram-Schmidt coordinate frame.
CurvatureFormMatrix curvature_form_at(const MetricField& m, const ChartPoint& p);
/// Curvature form of the total metric in the vertical-first frame.
CurvatureFormMatrix curvature_form_at(const SubmersionSpec& s, const ChartPoint& p);
/// Curvature form of the fiber-scaled metric in the scaled frame.
CurvatureFormMatrix curvature_form_at(const VariedMetric& vm, const ChartPoint& p);

/// Vertical-vertical curvature form of the split connection (the fiber-side
/// limit block of the scaled-metric curvature form).
FormMatrix fiber_curvature_form_at(const SubmersionSpec& s, const ChartPoint& p);

/// Pfaffian by recursive first-row expansion.  Requires a square matrix of
/// even size and even entry degree (so factors commute); throws
/// FormParityError for odd size.  Antisymmetry is the caller's contract:
/// only entries above the diagonal are read.
ExteriorForm pfaffian(const FormMatrix& a);
/// Scalar specialization.
double pfaffian(const Eigen::MatrixXd& a);
/// Reference Pfaffian as the full permutation sum
///   (1 / (2^m m!)) sum_sigma sgn(sigma) prod a_{sigma(2i-1), sigma(2i)};
/// exponential cost, intended as an oracle for sizes <= 6.
double pfaffian_permutation_sum(const Eigen::MatrixXd& a);

/// Normalized Euler form (2 pi)^{-n/2} Pf(omega) of a curvature form matrix.
/// Requires even n and an all-positive frame (throws FormParityError /
/// UnsupportedSignatureError otherwise).
ExteriorForm euler_form(const CurvatureFormMatrix& c);
ExteriorForm euler_form_at(const MetricField& m, const ChartPoint& p);
ExteriorForm euler_form_at(const VariedMetric& vm, const ChartPoint& p);

/// Pointwise pullback through the projection: feeds the differential at p to
/// the base form, (pi* alpha)(X_1, ..., X_d) = alpha(Dpi X_1, ..., Dpi X_d).
ExteriorForm pullback(const ExteriorForm& alpha, const ProjectionMap& pi, const ChartPoint& p);
/// Entrywise pullback of a matrix of base forms.
FormMatrix pullback(const FormMatrix& a, const ProjectionMap& pi, const ChartPoint& p);

}  // namespace fibershrink
