#pragma once

#include <stdexcept>
#include <string>

namespace fibershrink {

/// Base class for all library failure modes.
class FibershrinkError : public std::runtime_error {
public:
  explicit FibershrinkError(const std::string& what) : std::runtime_error(what) {}
};

/// Metric (or a restriction of it) fails the nondegeneracy pivot test.
class SingularMetricError : public FibershrinkError {
public:
  explicit SingularMetricError(const std::string& what) : FibershrinkError(what) {}
};

/// Restriction of the metric to a distribution is degenerate.
class DegenerateRestrictionError : public FibershrinkError {
public:
  explicit DegenerateRestrictionError(const std::string& what) : FibershrinkError(what) {}
};

/// Differential of the projection drops rank at the evaluation point.
class NotASubmersionError : public FibershrinkError {
public:
  explicit NotASubmersionError(const std::string& what) : FibershrinkError(what) {}
};

/// Scalar operation evaluated outside its domain (sqrt of nonpositive value, ...).
class DomainError : public FibershrinkError {
public:
  explicit DomainError(const std::string& what) : FibershrinkError(what) {}
};

/// Division (or inversion) at a point where the denominator vanishes.
class SingularPointError : public FibershrinkError {
public:
  explicit SingularPointError(const std::string& what) : FibershrinkError(what) {}
};

/// Exterior-algebra operands disagree (mixed cotangent dimensions or degrees
/// where a single one is required).
class FormAlgebraError : public FibershrinkError {
public:
  explicit FormAlgebraError(const std::string& what) : FibershrinkError(what) {}
};

/// Pfaffian requested for an odd-sized matrix.
class FormParityError : public FibershrinkError {
public:
  explicit FormParityError(const std::string& what) : FibershrinkError(what) {}
};

/// Operation defined only for Riemannian signature was fed an indefinite
/// metric.
class UnsupportedSignatureError : public FibershrinkError {
public:
  explicit UnsupportedSignatureError(const std::string& what) : FibershrinkError(what) {}
};

}  // namespace fibershrink
