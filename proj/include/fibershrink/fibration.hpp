#pragma once

// Quadrature over chart boxes, fiberwise integration of forms through a
// trivialization, Gauss-Bonnet style total integrals, and the epsilon-sweep
// experiment tracking how the curvature form blocks and the fiber pushforward
// behave as the fibers shrink.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fibershrink/examples.hpp"
#include "fibershrink/forms.hpp"

namespace fibershrink {

/// One-dimensional rule: nodes inside the coordinate interval with positive
/// weights.  Polar axes bake the u = cos(theta) substitution into the
/// weights, so callers always integrate plain coordinate functions.
struct AxisRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iterations from a
/// Chebyshev initial guess; accurate to machine precision).
AxisRule gauss_legendre(int n);

/// Tensor-product rule over a chart box.  Interval axes use Gauss-Legendre,
/// periodic axes the equal-weight trapezoid rule (spectrally accurate for
/// smooth periodic integrands), and polar axes Gauss-Legendre in u =
/// cos(theta) so the pole degeneracy of the chart never enters.
class QuadratureRule {
 public:
  QuadratureRule() = default;
  QuadratureRule(const Chart& box, const std::vector<AxisKind>& kinds, int order);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::int64_t node_count() const;
  Eigen::VectorXd node(std::int64_t i) const;
  double weight(std::int64_t i) const;
  const AxisRule& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }

 private:
  std::vector<AxisRule> axes_;
};

/// A pointwise exterior form on a chart, addressed by raw coordinates.
using FormField = std::function<ExteriorForm(const Eigen::VectorXd&)>;

/// Integral of a top-degree form field over the rule's box: sums the
/// coefficient of the full coordinate wedge with the product weights.
/// Node evaluations run on the worker pool (FIBERSHRINK_THREADS) in fixed
/// chunks, so the summation order -- and hence the result bit pattern -- does
/// not depend on the thread count.  Throws DomainError if the field's degree
/// is not the box dimension.
double integrate(const FormField& field, const QuadratureRule& rule);

/// Integral of the Euler form of a plain metric over its chart box.
double euler_integral(const MetricField& m, const std::vector<AxisKind>& kinds, int order);

/// Integral of the Euler form of the fiber-scaled metric over the total
/// chart box of an example.
double total_euler_integral(const ExampleSpec& ex, double eps, int order);

/// Integration along the fiber at base point q: for every base index tuple,
/// integrates the coefficient of (fiber volume wedge that tuple) in the
/// embedding pullback of the field over the fiber box.  Degree drops by the
/// fiber dimension; fields of lower degree push to the zero function.  The
/// rule must cover the trivialization's fiber box; a degenerate embedding
/// Jacobian at a node raises DomainError.
ExteriorForm fiber_pushforward(const FormField& field, const Trivialization& triv,
                               const ChartPoint& q, const QuadratureRule& fiber_rule);

/// Integral over the fiber at q of the Euler form of the fiber metric
/// (pairings of the vertical curvature in the vertical frame).  This is the
/// quadrature cross-check of the declared fiber Euler characteristic; even
/// fiber dimensions only.
double fiber_euler_integral(const ExampleSpec& ex, const ChartPoint& q, int order);

/// Shrink-parameter grids.  "linear" spaces eps evenly on [start, end);
/// "geometric" spaces 1 - eps log-evenly, clustering points toward 1, which
/// is what log-log slope fits need.  The end value is excluded so grids in
/// [start, end) stay clear of eps = 1.
std::vector<double> epsilon_grid(double start, double end, const std::string& spacing, int count);

/// Least-squares power law through (1 - eps, value) on log-log axes.
struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double ci95 = std::numeric_limits<double>::quiet_NaN();  // 1.96 * stderr of the slope
  bool flat = false;  // series below 1e-10 everywhere; no slope to fit
};

SlopeFit fit_log_slope(const std::vector<double>& eps, const std::vector<double>& values);

struct SweepRow {
  double eps = 0.0;
  /// Largest mixed-block coefficient of the scaled-metric curvature form
  /// over the probe points.
  double offdiag_norm = 0.0;
  /// Largest deviation of the diagonal blocks from their limits (vertical
  /// block vs fiber curvature form, horizontal block vs pulled-back base
  /// curvature form) over the probe points.
  double diag_corr_norm = 0.0;
  /// Largest coefficient of pi_* e(Omega^eps) - chi(F) e(Omega^B) over the
  /// base probe points; NaN when the Euler form is undefined.
  double pushforward_err = std::numeric_limits<double>::quiet_NaN();
  /// Integral of e(Omega^eps) over the total space; NaN when undefined or
  /// not requested.
  double total_euler_integral = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SlopeFit offdiag;
  SlopeFit diag_corr;
  SlopeFit pushforward;
};

struct SweepConfig {
  std::vector<double> eps;     // strictly increasing, inside [0, 1)
  int n_probes = 10;           // sample points for block norms and pushforward
  std::uint64_t seed = 0;
  int fiber_order = 16;        // fiber quadrature order for the pushforward
  int total_order = 0;         // total-space Euler integral order; 0 skips the column
};

/// Runs the shrink experiment on one example: per-eps block norms,
/// pushforward errors, optional total Euler integrals, and log-log slope
/// fits of each error series against 1 - eps.  Requires at least three grid
/// points for the fits.
SweepResult epsilon_sweep(const ExampleSpec& ex, const SweepConfig& cfg);

/// CSV with fixed columns
///   eps, offdiag_norm, diag_corr_norm, pushforward_err, total_euler_integral
/// one row per grid value; undefined entries print as nan.
std::string to_csv_string(const SweepResult& r);

/// Compact JSON mirror of the CSV plus the three slope fits.
std::string to_json_string(const SweepResult& r);

}  // namespace fibershrink
