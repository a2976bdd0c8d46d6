#pragma once

// Built-in catalog of submersion examples.  Each entry carries the total and
// base metrics, the projection, a global trivialization for fiberwise
// integration, the declared Euler characteristic of the fiber, and per-axis
// quadrature hints.

#include <string>
#include <vector>

#include "fibershrink/report.hpp"
#include "fibershrink/submersion.hpp"

namespace fibershrink {

/// How a chart coordinate should be integrated: a plain interval, a periodic
/// angle (trapezoid rule is spectrally accurate), or a polar angle in (0, pi)
/// whose measure degenerates like sin(theta) at the ends (handled by the
/// u = cos(theta) substitution).
enum class AxisKind { Interval, Periodic, Polar };

struct ExampleSpec {
  std::string name;
  SubmersionSpec sub;
  Trivialization triv;
  int fiber_dim = 0;
  int fiber_chi = 0;        // Euler characteristic of the fiber
  bool fiber_closed = true; // false for non-compact model fibers
  int base_chi = 0;         // Euler characteristic of the base
  bool base_closed = true;  // false for non-compact model bases
  std::vector<AxisKind> total_axes;
  std::vector<AxisKind> base_axes;
  std::vector<AxisKind> fiber_axes;

  /// Euler characteristic of the total space (multiplicative over the
  /// fibration); meaningful only when both factors are closed.
  int total_chi() const { return fiber_chi * base_chi; }
  bool closed() const { return fiber_closed && base_closed; }
};

const std::vector<std::string>& example_names();
ExampleSpec make_example(const std::string& name);

/// Sanity checks an example at seeded sample points: full-rank differential,
/// nondegenerate fiber metric, horizontal isometry onto the base metric,
/// signature bookkeeping, and trivialization consistency (pi after embed is
/// the identity on base coordinates, to first order).
ResidualReport validate_example(const ExampleSpec& ex, int n_points, std::uint64_t seed,
                                double tol);

}  // namespace fibershrink
