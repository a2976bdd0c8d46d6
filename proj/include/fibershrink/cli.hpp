#pragma once

// Batch command layer: identity verification over a catalog example, the
// shrink-parameter sweep, and Gauss-Bonnet checks, each emitting a
// machine-readable report.  The commands are plain library functions so the
// binary entry point stays a one-liner and tests can drive them directly.
//
// Exit codes: 0 all checks passed, 1 a numerical check failed (the report is
// still written), 2 usage error (unknown example, bad grid, bad flags).

#include <cstdint>
#include <string>
#include <vector>

namespace fibershrink {

struct RunConfig {
  std::string command;      // verify | sweep | gauss-bonnet
  std::string example;      // catalog name
  double eps = 0.5;         // single shrink parameter
  std::string eps_grid;     // "start:end:spacing:count"; empty = use eps
  int n_points = 50;        // sample/probe points
  std::uint64_t seed = 0;   // deterministic default; never time-based
  double tol = 1e-8;        // residual / integral tolerance
  int order = 8;            // quadrature order per axis
  std::string out;          // report path; empty = stdout summary only
  std::string format = "json";  // json | csv
};

/// Expands "start:end:spacing:count" (spacing: linear | geometric) into a
/// grid; throws DomainError on malformed syntax or invalid ranges.
std::vector<double> parse_eps_grid(const std::string& text);

/// Runs the projector, variation, and curvature identity suites plus the
/// example's own construction checks; writes a per-identity report.
int cmd_verify(const RunConfig& cfg);

/// Runs the shrink sweep and asserts the decay orders: off-diagonal block
/// slope >= 0.9, diagonal-correction slope >= 1.8, pushforward slope >= 1
/// with monotone decrease (flat series pass trivially).
int cmd_sweep(const RunConfig& cfg);

/// Integrates the Euler form of the fiber-scaled metric over the total
/// space and compares with the declared Euler characteristic.
int cmd_gauss_bonnet(const RunConfig& cfg);

/// Parses argv and dispatches to the command functions.
int run_cli(int argc, const char* const* argv);

}  // namespace fibershrink
