#include "fibershrink/fibration.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <Eigen/LU>

#include "fibershrink/errors.hpp"
#include "fibershrink/variation.hpp"

namespace fibershrink {
namespace {

int thread_count() {
  if (const char* env = std::getenv("FIBERSHRINK_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return std::min(v, 256);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Sums term(0) + ... + term(count - 1) in fixed chunks of 256.  Chunks are
/// farmed out to workers, but each chunk is summed left to right and the
/// chunk totals are combined in chunk order, so the result is bit-identical
/// for every thread count.
double chunked_sum(std::int64_t count, const std::function<double(std::int64_t)>& term) {
  constexpr std::int64_t kChunk = 256;
  const std::int64_t n_chunks = (count + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  const int workers = std::min<std::int64_t>(thread_count(), std::max<std::int64_t>(n_chunks, 1));

  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&]() {
    try {
      for (std::int64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
        double s = 0.0;
        const std::int64_t last = std::min(count, (c + 1) * kChunk);
        for (std::int64_t i = c * kChunk; i < last; ++i) s += term(i);
        partial[static_cast<std::size_t>(c)] = s;
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
      next.store(n_chunks);  // stop the remaining workers
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

AxisRule interval_rule(double lo, double hi, int order) {
  AxisRule base = gauss_legendre(order);
  AxisRule out;
  out.nodes.resize(order);
  out.weights.resize(order);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int i = 0; i < order; ++i) {
    out.nodes[i] = mid + half * base.nodes[i];
    out.weights[i] = half * base.weights[i];
  }
  return out;
}

AxisRule periodic_rule(double lo, double hi, int order) {
  AxisRule out;
  out.nodes.resize(order);
  out.weights.resize(order);
  const double h = (hi - lo) / order;
  for (int i = 0; i < order; ++i) {
    out.nodes[i] = lo + (i + 0.5) * h;  // offset keeps nodes inside the box
    out.weights[i] = h;
  }
  return out;
}

/// Gauss-Legendre in u = cos(theta): integrates f(theta) d(theta) for
/// integrands of the form sin(theta) * (smooth in cos(theta)), which is what
/// smooth forms look like near the poles of a polar chart.
AxisRule polar_rule(double lo, double hi, int order) {
  if (lo < 0.0 || hi > M_PI || lo >= hi)
    throw DomainError("polar axis must be a subinterval of [0, pi]");
  AxisRule u = interval_rule(std::cos(hi), std::cos(lo), order);
  AxisRule out;
  out.nodes.resize(order);
  out.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    const double theta = std::acos(u.nodes[i]);
    out.nodes[i] = theta;
    out.weights[i] = u.weights[i] / std::sin(theta);
  }
  return out;
}

void append_double(std::string& out, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

AxisRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("quadrature order must be at least 1");
  AxisRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-based initial guess for the i-th root of P_n, then Newton.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

QuadratureRule::QuadratureRule(const Chart& box, const std::vector<AxisKind>& kinds, int order) {
  if (static_cast<int>(kinds.size()) != box.dim())
    throw DomainError("axis kinds must match the chart dimension");
  if (order < 1) throw DomainError("quadrature order must be at least 1");
  axes_.reserve(kinds.size());
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const double lo = box.lo[static_cast<Eigen::Index>(k)];
    const double hi = box.hi[static_cast<Eigen::Index>(k)];
    switch (kinds[k]) {
      case AxisKind::Interval: axes_.push_back(interval_rule(lo, hi, order)); break;
      case AxisKind::Periodic: axes_.push_back(periodic_rule(lo, hi, order)); break;
      case AxisKind::Polar: axes_.push_back(polar_rule(lo, hi, order)); break;
    }
  }
}

std::int64_t QuadratureRule::node_count() const {
  std::int64_t n = 1;
  for (const auto& a : axes_) n *= a.nodes.size();
  return n;
}

Eigen::VectorXd QuadratureRule::node(std::int64_t i) const {
  Eigen::VectorXd x(dim());
  for (int k = dim() - 1; k >= 0; --k) {
    const auto& a = axes_[static_cast<std::size_t>(k)];
    const std::int64_t nk = a.nodes.size();
    x[k] = a.nodes[static_cast<Eigen::Index>(i % nk)];
    i /= nk;
  }
  return x;
}

double QuadratureRule::weight(std::int64_t i) const {
  double w = 1.0;
  for (int k = dim() - 1; k >= 0; --k) {
    const auto& a = axes_[static_cast<std::size_t>(k)];
    const std::int64_t nk = a.nodes.size();
    w *= a.weights[static_cast<Eigen::Index>(i % nk)];
    i /= nk;
  }
  return w;
}

double integrate(const FormField& field, const QuadratureRule& rule) {
  const std::uint32_t full = (1u << rule.dim()) - 1u;
  return chunked_sum(rule.node_count(), [&](std::int64_t i) {
    const ExteriorForm f = field(rule.node(i));
    if (f.dim() != rule.dim() || f.degree() != rule.dim())
      throw DomainError("total integral requires a top-degree form on the box");
    return rule.weight(i) * f.coeff_mask(full);
  });
}

double euler_integral(const MetricField& m, const std::vector<AxisKind>& kinds, int order) {
  QuadratureRule rule(m.chart, kinds, order);
  const std::string chart_id = m.chart.id;
  return integrate(
      [&m, &chart_id](const Eigen::VectorXd& x) {
        return euler_form_at(m, ChartPoint{chart_id, x});
      },
      rule);
}

double total_euler_integral(const ExampleSpec& ex, double eps, int order) {
  const VariedMetric vm = make_varied_metric(ex.sub, eps);
  QuadratureRule rule(ex.sub.total.chart, ex.total_axes, order);
  const std::string chart_id = ex.sub.total.chart.id;
  return integrate(
      [&vm, &chart_id](const Eigen::VectorXd& x) {
        return euler_form_at(vm, ChartPoint{chart_id, x});
      },
      rule);
}

ExteriorForm fiber_pushforward(const FormField& field, const Trivialization& triv,
                               const ChartPoint& q, const QuadratureRule& fiber_rule) {
  const int k = triv.fiber.dim();
  const int b = static_cast<int>(q.x.size());
  if (fiber_rule.dim() != k) throw DomainError("fiber rule must cover the fiber box");

  const std::uint32_t fiber_mask = (1u << k) - 1u;
  ExteriorForm out(b, 0);
  bool out_shaped = false;

  const std::int64_t count = fiber_rule.node_count();
  for (std::int64_t i = 0; i < count; ++i) {
    Eigen::VectorXd ty(k + b);
    ty.head(k) = fiber_rule.node(i);
    ty.tail(b) = q.x;

    const JetVec xj = triv.embed(seed_coords(ty, 1));
    const int n = static_cast<int>(xj.size());
    if (n != k + b) throw DomainError("trivialization must chart the full total space");
    Eigen::MatrixXd jac(n, k + b);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < k + b; ++c) jac(a, c) = xj(a).d1(c);
    if (std::abs(jac.determinant()) < 1e-12)
      throw DomainError("trivialization Jacobian degenerate at a quadrature node");

    const ExteriorForm fx = field(values_of(xj));
    if (fx.dim() != n) throw DomainError("pushforward field must live on the total space");
    if (!out_shaped) {
      out = ExteriorForm(b, std::max(fx.degree() - k, 0));
      out_shaped = true;
    }
    if (fx.degree() < k) continue;  // nothing survives the fiber integral

    const double w = fiber_rule.weight(i);
    const int base_deg = fx.degree() - k;
    std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(fx.degree()));
    for (int c = 0; c < k; ++c) args[static_cast<std::size_t>(c)] = jac.col(c);
    const std::uint32_t base_size = 1u << b;
    for (std::uint32_t beta = 0; beta < base_size; ++beta) {
      if (std::popcount(beta) != base_deg) continue;
      int c = k;
      for (int a = 0; beta >> a; ++a)
        if (beta & (1u << a)) args[static_cast<std::size_t>(c++)] = jac.col(k + a);
      out.add_mask(beta, w * fx.evaluate(args));
    }
  }
  return out;
}

double fiber_euler_integral(const ExampleSpec& ex, const ChartPoint& q, int order) {
  const int k = ex.fiber_dim;
  if (k % 2 != 0) throw FormParityError("fiber Euler integral requires an even fiber dimension");
  if (k == 0) return 1.0;  // a point fiber has Euler characteristic one
  QuadratureRule rule(ex.triv.fiber, ex.fiber_axes, order);
  const std::string chart_id = ex.sub.total.chart.id;
  const double norm = std::pow(2.0 * M_PI, -k / 2.0);
  FormField field = [&](const Eigen::VectorXd& x) {
    return norm * pfaffian(fiber_curvature_form_at(ex.sub, ChartPoint{chart_id, x}));
  };
  const ExteriorForm pushed = fiber_pushforward(field, ex.triv, q, rule);
  return pushed.coeff_mask(0);
}

std::vector<double> epsilon_grid(double start, double end, const std::string& spacing,
                                 int count) {
  if (count < 1) throw DomainError("epsilon grid needs at least one point");
  if (!(start < end)) throw DomainError("epsilon grid start must be below end");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (spacing == "linear") {
    const double h = (end - start) / count;
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + i * h;
  } else if (spacing == "geometric") {
    if (!(end < 1.0) || !(start < 1.0))
      throw DomainError("geometric epsilon grid requires start, end below 1");
    const double r0 = 1.0 - start, r1 = 1.0 - end;
    const double q = std::pow(r1 / r0, 1.0 / count);
    for (int i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = 1.0 - r0 * std::pow(q, i);
  } else {
    throw DomainError("epsilon grid spacing must be linear or geometric");
  }
  return out;
}

SlopeFit fit_log_slope(const std::vector<double>& eps, const std::vector<double>& values) {
  SlopeFit fit;
  double peak = 0.0;
  for (double v : values)
    if (std::isfinite(v)) peak = std::max(peak, v);
  if (peak < 1e-10) {
    fit.flat = true;
    return fit;
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) continue;
    xs.push_back(std::log(1.0 - eps[i]));
    ys.push_back(std::log(values[i]));
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    fit.flat = true;
    return fit;
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  fit.slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - ybar - fit.slope * (xs[i] - xbar);
    ssr += r * r;
  }
  fit.ci95 = 1.96 * std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

SweepResult epsilon_sweep(const ExampleSpec& ex, const SweepConfig& cfg) {
  if (cfg.eps.size() < 3) throw DomainError("epsilon sweep needs at least three grid points");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    if (cfg.eps[i] < 0.0 || cfg.eps[i] >= 1.0)
      throw DomainError("epsilon sweep grid must lie inside [0, 1)");
    if (i > 0 && cfg.eps[i] <= cfg.eps[i - 1])
      throw DomainError("epsilon sweep grid must increase strictly");
  }

  const std::vector<ChartPoint> probes =
      sample_points(ex.sub.total.chart, cfg.n_probes, cfg.seed);
  const std::vector<ChartPoint> base_probes =
      sample_points(ex.sub.base.chart, cfg.n_probes, cfg.seed + 1);
  const std::string total_id = ex.sub.total.chart.id;

  // eps-independent reference data at each probe.
  struct ProbeRef {
    FormMatrix fiber;        // vertical-block limit
    FormMatrix pulled_base;  // horizontal-block limit
  };
  std::vector<ProbeRef> refs;
  refs.reserve(probes.size());
  for (const ChartPoint& p : probes) {
    const ChartPoint bp{ex.sub.base.chart.id,
                        values_of(ex.sub.proj.eval(seed_coords(p.x, 1)))};
    refs.push_back(ProbeRef{fiber_curvature_form_at(ex.sub, p),
                            pullback(curvature_form_at(ex.sub.base, bp).omega, ex.sub.proj, p)});
  }
  std::vector<ExteriorForm> base_targets;  // chi(F) * e(Omega^B) at the base probes
  bool base_euler_ok = true;
  try {
    for (const ChartPoint& q : base_probes)
      base_targets.push_back(static_cast<double>(ex.fiber_chi) * euler_form_at(ex.sub.base, q));
  } catch (const FibershrinkError&) {
    base_euler_ok = false;
  }
  QuadratureRule fiber_rule;
  if (ex.fiber_dim > 0) fiber_rule = QuadratureRule(ex.triv.fiber, ex.fiber_axes, cfg.fiber_order);

  SweepResult result;
  result.rows.reserve(cfg.eps.size());
  for (double eps : cfg.eps) {
    SweepRow row;
    row.eps = eps;
    const VariedMetric vm = make_varied_metric(ex.sub, eps);

    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      const CurvatureFormMatrix cf = curvature_form_at(vm, probes[pi]);
      row.offdiag_norm = std::max(row.offdiag_norm, mixed_block(cf).max_abs_coeff());
      const FormMatrix vv = vertical_block(cf);
      const FormMatrix hh = horizontal_block(cf);
      double corr = 0.0;
      for (int i = 0; i < vv.rows(); ++i)
        for (int j = 0; j < vv.cols(); ++j)
          corr = std::max(corr, (vv.at(i, j) - refs[pi].fiber.at(i, j)).max_abs_coeff());
      for (int i = 0; i < hh.rows(); ++i)
        for (int j = 0; j < hh.cols(); ++j)
          corr = std::max(corr, (hh.at(i, j) - refs[pi].pulled_base.at(i, j)).max_abs_coeff());
      row.diag_corr_norm = std::max(row.diag_corr_norm, corr);
    }

    if (base_euler_ok) {
      try {
        FormField euler_field = [&vm, &total_id](const Eigen::VectorXd& x) {
          return euler_form_at(vm, ChartPoint{total_id, x});
        };
        double err = 0.0;
        for (std::size_t qi = 0; qi < base_probes.size(); ++qi) {
          const ExteriorForm pushed =
              fiber_pushforward(euler_field, ex.triv, base_probes[qi], fiber_rule);
          err = std::max(err, (pushed - base_targets[qi]).max_abs_coeff());
        }
        row.pushforward_err = err;
      } catch (const FibershrinkError&) {
        // leaves NaN: the Euler form does not exist for this example
      }
    }

    if (cfg.total_order > 0) {
      try {
        row.total_euler_integral = total_euler_integral(ex, eps, cfg.total_order);
      } catch (const FibershrinkError&) {
        // leaves NaN
      }
    }
    result.rows.push_back(row);
  }

  std::vector<double> off, corr, push;
  for (const SweepRow& r : result.rows) {
    off.push_back(r.offdiag_norm);
    corr.push_back(r.diag_corr_norm);
    push.push_back(r.pushforward_err);
  }
  result.offdiag = fit_log_slope(cfg.eps, off);
  result.diag_corr = fit_log_slope(cfg.eps, corr);
  result.pushforward = fit_log_slope(cfg.eps, push);
  return result;
}

std::string to_csv_string(const SweepResult& r) {
  std::string out = "eps,offdiag_norm,diag_corr_norm,pushforward_err,total_euler_integral\n";
  for (const SweepRow& row : r.rows) {
    append_double(out, row.eps);
    out += ',';
    append_double(out, row.offdiag_norm);
    out += ',';
    append_double(out, row.diag_corr_norm);
    out += ',';
    append_double(out, row.pushforward_err);
    out += ',';
    append_double(out, row.total_euler_integral);
    out += '\n';
  }
  return out;
}

namespace {

void append_fit(std::string& out, const char* name, const SlopeFit& f) {
  out += "\"";
  out += name;
  out += "\":{\"slope\":";
  if (std::isfinite(f.slope)) {
    append_double(out, f.slope);
  } else {
    out += "null";
  }
  out += ",\"ci95\":";
  if (std::isfinite(f.ci95)) {
    append_double(out, f.ci95);
  } else {
    out += "null";
  }
  out += ",\"flat\":";
  out += f.flat ? "true" : "false";
  out += "}";
}

void append_maybe(std::string& out, double v) {
  if (std::isfinite(v)) {
    append_double(out, v);
  } else {
    out += "null";
  }
}

}  // namespace

std::string to_json_string(const SweepResult& r) {
  std::string out = "{\"rows\":[";
  bool first = true;
  for (const SweepRow& row : r.rows) {
    if (!first) out += ',';
    first = false;
    out += "{\"eps\":";
    append_double(out, row.eps);
    out += ",\"offdiag_norm\":";
    append_maybe(out, row.offdiag_norm);
    out += ",\"diag_corr_norm\":";
    append_maybe(out, row.diag_corr_norm);
    out += ",\"pushforward_err\":";
    append_maybe(out, row.pushforward_err);
    out += ",\"total_euler_integral\":";
    append_maybe(out, row.total_euler_integral);
    out += "}";
  }
  out += "],\"fits\":{";
  append_fit(out, "offdiag", r.offdiag);
  out += ',';
  append_fit(out, "diag_corr", r.diag_corr);
  out += ',';
  append_fit(out, "pushforward", r.pushforward);
  out += "}}";
  return out;
}

}  // namespace fibershrink
