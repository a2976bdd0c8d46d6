#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace fibershrink {

/// Deterministic uniform generator.  Draws are derived from raw mt19937_64
/// words so sequences are identical across platforms and standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  std::uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
};

}  // namespace fibershrink
