#include "fibershrink/cli.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fibershrink/curvature_compare.hpp"
#include "fibershrink/errors.hpp"
#include "fibershrink/examples.hpp"
#include "fibershrink/fibration.hpp"
#include "fibershrink/submersion.hpp"
#include "fibershrink/variation.hpp"

namespace fibershrink {
namespace {

using nlohmann::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ExampleSpec load_example(const std::string& name) {
  const auto& names = example_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string msg = "unknown example '" + name + "'; available:";
    for (const auto& n : names) msg += " " + n;
    throw DomainError(msg);
  }
  return make_example(name);
}

/// Report envelope: everything nondeterministic lives in meta.timestamp.
ordered_json report_header(const RunConfig& cfg) {
  ordered_json meta;
  meta["timestamp"] = utc_timestamp();
  meta["command"] = cfg.command;
  meta["example"] = cfg.example;
  meta["points"] = cfg.n_points;
  meta["seed"] = cfg.seed;
  meta["tol"] = cfg.tol;
  meta["order"] = cfg.order;
  ordered_json doc;
  doc["schema"] = 1;
  doc["meta"] = meta;
  return doc;
}

/// Writes the report file if a path is configured; returns false (and prints
/// to stderr) when the path cannot be opened.
bool write_report(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) return true;
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) {
    std::fprintf(stderr, "error: cannot open output path '%s'\n", cfg.out.c_str());
    return false;
  }
  f << text;
  return f.good();
}

std::string csv_escape_point(const Eigen::VectorXd& p) {
  std::string out;
  char buf[48];
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) out += ';';
    std::snprintf(buf, sizeof buf, "%.17g", p[i]);
    out += buf;
  }
  return out;
}

struct SuiteRun {
  std::string suite;
  double eps = 0.0;
  bool has_eps = false;
  ResidualReport report;
};

std::vector<double> verify_eps_values(const RunConfig& cfg) {
  if (!cfg.eps_grid.empty()) return parse_eps_grid(cfg.eps_grid);
  return {cfg.eps};
}

}  // namespace

std::vector<double> parse_eps_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4)
    throw DomainError("eps grid must be start:end:spacing:count, e.g. 0.5:0.99:geometric:8");
  double start = 0.0, end = 0.0;
  int count = 0;
  try {
    std::size_t used = 0;
    start = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    end = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    count = std::stoi(parts[3], &used);
    if (used != parts[3].size()) throw std::invalid_argument(parts[3]);
  } catch (const std::exception&) {
    throw DomainError("eps grid fields must be numeric: start:end:spacing:count");
  }
  return epsilon_grid(start, end, parts[2], count);
}

int cmd_verify(const RunConfig& cfg) {
  ExampleSpec ex;
  std::vector<double> eps_values;
  try {
    ex = load_example(cfg.example);
    eps_values = verify_eps_values(cfg);
    if (cfg.tol <= 0.0) throw DomainError("tolerance must be positive");
  } catch (const FibershrinkError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  std::vector<SuiteRun> runs;
  runs.push_back({"example", 0.0, false,
                  validate_example(ex, std::min(cfg.n_points, 200), cfg.seed, cfg.tol)});
  runs.push_back(
      {"projector", 0.0, false, run_identity_suite(ex.sub, cfg.n_points, cfg.seed, cfg.tol)});
  for (double e : eps_values) {
    runs.push_back(
        {"variation", e, true, run_variation_suite(ex.sub, e, cfg.n_points, cfg.seed, cfg.tol)});
    runs.push_back(
        {"curvature", e, true, run_curvature_suite(ex.sub, e, cfg.n_points, cfg.seed, cfg.tol)});
  }

  bool all_pass = true;
  double worst = 0.0;
  for (const SuiteRun& r : runs) {
    all_pass = all_pass && r.report.all_pass();
    worst = std::max(worst, r.report.worst());
    if (r.has_eps) {
      std::printf("%-10s eps %-8.4g worst %.3e  %s\n", r.suite.c_str(), r.eps,
                  r.report.worst(), r.report.all_pass() ? "ok" : "FAIL");
    } else {
      std::printf("%-10s %-12s worst %.3e  %s\n", r.suite.c_str(), "", r.report.worst(),
                  r.report.all_pass() ? "ok" : "FAIL");
    }
  }
  std::printf("verify %s: %s (worst residual %.3e, tol %.3g)\n", cfg.example.c_str(),
              all_pass ? "PASS" : "FAIL", worst, cfg.tol);

  std::string text;
  if (cfg.format == "json") {
    ordered_json doc = report_header(cfg);
    doc["meta"]["eps"] = eps_values;
    ordered_json identities = ordered_json::array();
    for (const SuiteRun& r : runs)
      for (const IdentityResidual& e : r.report.entries) {
        ordered_json row;
        row["name"] = e.identity_name;
        row["suite"] = r.suite;
        if (r.has_eps) {
          row["eps"] = r.eps;
        } else {
          row["eps"] = nullptr;
        }
        row["max_residual"] = e.max_residual;
        row["argmax_point"] = std::vector<double>(
            e.argmax_point.data(), e.argmax_point.data() + e.argmax_point.size());
        row["n_points"] = e.n_points;
        row["pass"] = e.pass;
        identities.push_back(row);
      }
    doc["identities"] = identities;
    doc["worst_residual"] = worst;
    doc["pass"] = all_pass;
    text = doc.dump(2) + "\n";
  } else {
    text = "identity,suite,eps,max_residual,tol,pass,argmax_point\n";
    char buf[160];
    for (const SuiteRun& r : runs)
      for (const IdentityResidual& e : r.report.entries) {
        std::snprintf(buf, sizeof buf, "%s,%s,", e.identity_name.c_str(), r.suite.c_str());
        text += buf;
        if (r.has_eps) {
          std::snprintf(buf, sizeof buf, "%.17g", r.eps);
          text += buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d,", e.max_residual, cfg.tol,
                      e.pass ? 1 : 0);
        text += buf;
        text += "\"" + csv_escape_point(e.argmax_point) + "\"\n";
      }
  }
  if (!write_report(cfg, text)) return kExitUsage;
  return all_pass ? kExitPass : kExitFail;
}

int cmd_sweep(const RunConfig& cfg) {
  ExampleSpec ex;
  SweepConfig sc;
  try {
    ex = load_example(cfg.example);
    sc.eps = cfg.eps_grid.empty() ? epsilon_grid(0.5, 0.99, "geometric", 8)
                                  : parse_eps_grid(cfg.eps_grid);
    sc.n_probes = cfg.n_points;
    sc.seed = cfg.seed;
    sc.fiber_order = cfg.order;
    sc.total_order = cfg.order;
  } catch (const FibershrinkError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  SweepResult sr;
  try {
    sr = epsilon_sweep(ex, sc);
  } catch (const FibershrinkError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  struct Assertion {
    const char* name;
    const SlopeFit* fit;
    double required;
    bool pass;
  };
  bool push_monotone = true;
  for (std::size_t i = 1; i < sr.rows.size(); ++i) {
    const double prev = sr.rows[i - 1].pushforward_err, curr = sr.rows[i].pushforward_err;
    if (std::isfinite(prev) && std::isfinite(curr) && !(curr < prev) && prev > 1e-10)
      push_monotone = false;
  }
  std::vector<Assertion> asserts = {
      {"offdiag", &sr.offdiag, 0.9, sr.offdiag.flat || sr.offdiag.slope >= 0.9},
      {"diag_corr", &sr.diag_corr, 1.8, sr.diag_corr.flat || sr.diag_corr.slope >= 1.8},
      {"pushforward", &sr.pushforward, 1.0,
       sr.pushforward.flat || (sr.pushforward.slope >= 1.0 && push_monotone)},
  };
  bool all_pass = true;
  for (const Assertion& a : asserts) {
    all_pass = all_pass && a.pass;
    if (a.fit->flat) {
      std::printf("%-12s flat (series below 1e-10)      %s\n", a.name, a.pass ? "ok" : "FAIL");
    } else {
      std::printf("%-12s slope %8.4f (ci95 %.2e) >= %.1f  %s\n", a.name, a.fit->slope,
                  a.fit->ci95, a.required, a.pass ? "ok" : "FAIL");
    }
  }
  std::printf("sweep %s: %s\n", cfg.example.c_str(), all_pass ? "PASS" : "FAIL");

  std::string text;
  if (cfg.format == "json") {
    ordered_json doc = report_header(cfg);
    doc["meta"]["eps"] = sc.eps;
    doc["sweep"] = ordered_json::parse(to_json_string(sr));
    ordered_json checks;
    for (const Assertion& a : asserts) {
      ordered_json c;
      c["required_slope"] = a.required;
      if (std::isfinite(a.fit->slope)) {
        c["slope"] = a.fit->slope;
      } else {
        c["slope"] = nullptr;
      }
      c["flat"] = a.fit->flat;
      c["pass"] = a.pass;
      checks[a.name] = c;
    }
    doc["assertions"] = checks;
    doc["pass"] = all_pass;
    text = doc.dump(2) + "\n";
  } else {
    text = to_csv_string(sr);
  }
  if (!write_report(cfg, text)) return kExitUsage;
  return all_pass ? kExitPass : kExitFail;
}

int cmd_gauss_bonnet(const RunConfig& cfg) {
  ExampleSpec ex;
  try {
    ex = load_example(cfg.example);
    if (cfg.tol <= 0.0) throw DomainError("tolerance must be positive");
    if (ex.sub.total.dim() % 2 != 0)
      throw DomainError("gauss-bonnet requires an even-dimensional example");
    for (int i = 0; i < ex.sub.total.dim(); ++i)
      if (ex.sub.total.signature[i] != 1)
        throw DomainError("gauss-bonnet requires a Riemannian example");
    if (!ex.closed())
      throw DomainError("gauss-bonnet requires a closed (compact) example");
  } catch (const FibershrinkError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  double integral = 0.0;
  try {
    integral = total_euler_integral(ex, cfg.eps, cfg.order);
  } catch (const FibershrinkError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  const int chi = ex.total_chi();
  const double err = std::abs(integral - chi);
  const bool pass = err < cfg.tol;
  std::printf("integral %.12f  chi %d  |error| %.3e  tol %.3g\n", integral, chi, err, cfg.tol);
  std::printf("gauss-bonnet %s (eps %.4g, order %d): %s\n", cfg.example.c_str(), cfg.eps,
              cfg.order, pass ? "PASS" : "FAIL");

  std::string text;
  if (cfg.format == "json") {
    ordered_json doc = report_header(cfg);
    doc["meta"]["eps"] = cfg.eps;
    ordered_json gb;
    gb["integral"] = integral;
    gb["chi"] = chi;
    gb["abs_error"] = err;
    doc["gauss_bonnet"] = gb;
    doc["pass"] = pass;
    text = doc.dump(2) + "\n";
  } else {
    char buf[128];
    std::snprintf(buf, sizeof buf, "integral,chi,abs_error,tol,pass\n%.17g,%d,%.17g,%.17g,%d\n",
                  integral, chi, err, cfg.tol, pass ? 1 : 0);
    text = buf;
  }
  if (!write_report(cfg, text)) return kExitUsage;
  return pass ? kExitPass : kExitFail;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "fibershrink: curvature identities, shrink sweeps, and Gauss-Bonnet\n"
      "checks for fiber-scaled submersion metrics.  FIBERSHRINK_THREADS\n"
      "overrides the quadrature worker count (results are bit-identical\n"
      "for any value)."};
  app.require_subcommand(1);

  RunConfig verify_cfg, sweep_cfg, gb_cfg;

  CLI::App* verify = app.add_subcommand("verify", "run the identity suites on one example");
  verify_cfg.command = "verify";
  verify->add_option("--example", verify_cfg.example, "catalog example name")->required();
  auto* veps = verify->add_option("--eps", verify_cfg.eps, "shrink parameter (default 0.5)");
  verify->add_option("--eps-grid", verify_cfg.eps_grid, "start:end:spacing:count grid")
      ->excludes(veps);
  verify->add_option("--points", verify_cfg.n_points, "sample points per suite (default 50)");
  verify->add_option("--seed", verify_cfg.seed, "sampling seed (default 0)");
  verify->add_option("--tol", verify_cfg.tol, "residual tolerance (default 1e-8)");
  verify->add_option("--out", verify_cfg.out, "report file path");
  verify->add_option("--format", verify_cfg.format, "report format (default json)")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* sweep = app.add_subcommand("sweep", "shrink sweep with decay-order assertions");
  sweep_cfg.command = "sweep";
  sweep_cfg.n_points = 10;
  sweep_cfg.order = 6;
  sweep_cfg.format = "csv";
  sweep->add_option("--example", sweep_cfg.example, "catalog example name")->required();
  sweep->add_option("--eps-grid", sweep_cfg.eps_grid,
                    "start:end:spacing:count (default 0.5:0.99:geometric:8)");
  sweep->add_option("--points", sweep_cfg.n_points, "probe points (default 10)");
  sweep->add_option("--seed", sweep_cfg.seed, "sampling seed (default 0)");
  sweep->add_option("--order", sweep_cfg.order, "quadrature order per axis (default 6)");
  sweep->add_option("--out", sweep_cfg.out, "report file path");
  sweep->add_option("--format", sweep_cfg.format, "report format (default csv)")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* gb = app.add_subcommand("gauss-bonnet", "Euler form integral vs Euler number");
  gb_cfg.command = "gauss-bonnet";
  gb_cfg.eps = 0.0;
  gb_cfg.tol = 1e-4;
  gb->add_option("--example", gb_cfg.example, "catalog example name")->required();
  gb->add_option("--eps", gb_cfg.eps, "shrink parameter (default 0)");
  gb->add_option("--order", gb_cfg.order, "quadrature order per axis (default 8)");
  gb->add_option("--seed", gb_cfg.seed, "accepted for config uniformity");
  gb->add_option("--tol", gb_cfg.tol, "integral tolerance (default 1e-4)");
  gb->add_option("--out", gb_cfg.out, "report file path");
  gb->add_option("--format", gb_cfg.format, "report format (default json)")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (verify->parsed()) return cmd_verify(verify_cfg);
  if (sweep->parsed()) return cmd_sweep(sweep_cfg);
  if (gb->parsed()) return cmd_gauss_bonnet(gb_cfg);
  return kExitUsage;
}

}  // namespace fibershrink
