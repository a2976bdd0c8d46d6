#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fibershrink {

/// Worst-case residual of one named identity over a set of sample points.
struct IdentityResidual {
  std::string identity_name;
  double max_residual = 0.0;
  Eigen::VectorXd argmax_point;
  int n_points = 0;
  double tol = 0.0;
  bool pass = false;
};

struct ResidualReport {
  std::vector<IdentityResidual> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_residual);
    return w;
  }
  /// Entry with the largest residual (default-constructed if the report is empty).
  IdentityResidual worst_entry() const {
    IdentityResidual w;
    for (const auto& e : entries)
      if (w.identity_name.empty() || e.max_residual > w.max_residual) w = e;
    return w;
  }
};

/// Collects per-point residuals, tracking the argmax point per identity.
/// Entry order is first-seen order, so reports are stable run to run.
class ResidualAccumulator {
public:
  void add(const std::string& name, double residual, const Eigen::VectorXd& point) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      it = index_.emplace(name, entries_.size()).first;
      entries_.push_back(IdentityResidual{name, residual, point, 1, 0.0, false});
      return;
    }
    IdentityResidual& e = entries_[it->second];
    ++e.n_points;
    if (residual > e.max_residual) {
      e.max_residual = residual;
      e.argmax_point = point;
    }
  }

  ResidualReport finish(double tol) const {
    ResidualReport r;
    r.entries = entries_;
    for (auto& e : r.entries) {
      e.tol = tol;
      e.pass = e.max_residual < tol;
    }
    return r;
  }

private:
  std::vector<IdentityResidual> entries_;
  std::map<std::string, size_t> index_;
};

}  // namespace fibershrink
