#include "fibershrink/examples.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "fibershrink/errors.hpp"
#include "fibershrink/sampling.hpp"

namespace fibershrink {

namespace {

Eigen::VectorXd dvec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Chart box(const std::string& id, std::initializer_list<double> lo,
          std::initializer_list<double> hi) {
  return Chart{id, dvec(lo), dvec(hi)};
}

MetricField euclidean(const std::string& id, int n, std::initializer_list<int> signs = {}) {
  MetricField m;
  m.chart = Chart{id, Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0)};
  m.signature = Eigen::VectorXi::Constant(n, 1);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 1.0);
  if (signs.size() != 0) {
    int i = 0;
    for (int s : signs) {
      m.signature[i] = s;
      diag[i] = static_cast<double>(s);
      ++i;
    }
  }
  m.eval = [n, diag](const JetVec&) {
    JetMat g(n, n);
    for (int i = 0; i < n; ++i) g(i, i) = Jet3(diag[i]);
    return g;
  };
  return m;
}

MetricField torus(const std::string& id, int n, double period) {
  MetricField m;
  m.chart = Chart{id, Eigen::VectorXd::Constant(n, 0.0), Eigen::VectorXd::Constant(n, period)};
  m.signature = Eigen::VectorXi::Constant(n, 1);
  m.eval = [n](const JetVec&) {
    JetMat g(n, n);
    for (int i = 0; i < n; ++i) g(i, i) = Jet3(1.0);
    return g;
  };
  return m;
}

// Round 2-sphere of the given radius in polar coordinates.
MetricField sphere2(const std::string& id, double radius) {
  MetricField m;
  m.chart = box(id, {0.0, 0.0}, {M_PI, 2.0 * M_PI});
  m.signature = Eigen::VectorXi::Constant(2, 1);
  const double r2 = radius * radius;
  m.eval = [r2](const JetVec& x) {
    JetMat g(2, 2);
    Jet3 s = sin(x[0]);
    g(0, 0) = Jet3(r2);
    g(1, 1) = r2 * s * s;
    return g;
  };
  return m;
}

// Unit round 3-sphere in Euler angles; the third angle parametrizes the
// circle fibers of the classical fibration over the half-radius sphere.
JetMat s3_block(const Jet3& theta) {
  JetMat g(3, 3);
  Jet3 c = cos(theta);
  g(0, 0) = Jet3(0.25);
  g(1, 1) = Jet3(0.25);
  g(2, 2) = Jet3(0.25);
  g(1, 2) = 0.25 * c;
  g(2, 1) = g(1, 2);
  return g;
}

ProjectionMap coord_projection(int domain_dim, std::vector<int> picks) {
  ProjectionMap p;
  p.domain_dim = domain_dim;
  p.base_dim = static_cast<int>(picks.size());
  p.eval = [picks](const JetVec& x) {
    JetVec y(static_cast<Eigen::Index>(picks.size()));
    for (size_t a = 0; a < picks.size(); ++a) y[static_cast<Eigen::Index>(a)] = x[picks[a]];
    return y;
  };
  return p;
}

/// Reorders (fiber coords, base coords) into total-space coordinate slots.
Trivialization slot_trivialization(Chart fiber, std::vector<int> fiber_slots,
                                   std::vector<int> base_slots) {
  Trivialization t;
  t.fiber = std::move(fiber);
  const int n = static_cast<int>(fiber_slots.size() + base_slots.size());
  t.embed = [fiber_slots, base_slots, n](const JetVec& ty) {
    JetVec x(n);
    for (size_t i = 0; i < fiber_slots.size(); ++i) x[fiber_slots[i]] = ty[static_cast<Eigen::Index>(i)];
    for (size_t i = 0; i < base_slots.size(); ++i)
      x[base_slots[i]] = ty[static_cast<Eigen::Index>(fiber_slots.size() + i)];
    return x;
  };
  return t;
}

ExampleSpec euclidean_product() {
  ExampleSpec ex;
  ex.name = "euclidean-product";
  ex.sub.total = euclidean("r4", 4);
  ex.sub.base = euclidean("r2", 2);
  ex.sub.proj = coord_projection(4, {0, 1});
  ex.triv = slot_trivialization(Chart{"r4-fiber", dvec({-1.0, -1.0}), dvec({1.0, 1.0})}, {2, 3},
                                {0, 1});
  ex.fiber_dim = 2;
  ex.fiber_chi = 1;
  ex.fiber_closed = false;
  ex.base_chi = 1;
  ex.base_closed = false;
  ex.total_axes = {AxisKind::Interval, AxisKind::Interval, AxisKind::Interval, AxisKind::Interval};
  ex.base_axes = {AxisKind::Interval, AxisKind::Interval};
  ex.fiber_axes = {AxisKind::Interval, AxisKind::Interval};
  return ex;
}

ExampleSpec flat_torus_bundle() {
  ExampleSpec ex;
  ex.name = "flat-torus-bundle";
  ex.sub.total = torus("t2", 2, 2.0 * M_PI);
  ex.sub.base = torus("s1", 1, 2.0 * M_PI);
  ex.sub.proj = coord_projection(2, {1});
  ex.triv = slot_trivialization(Chart{"t2-fiber", dvec({0.0}), dvec({2.0 * M_PI})}, {0}, {1});
  ex.fiber_dim = 1;
  ex.fiber_chi = 0;
  ex.base_chi = 0;
  ex.total_axes = {AxisKind::Periodic, AxisKind::Periodic};
  ex.base_axes = {AxisKind::Periodic};
  ex.fiber_axes = {AxisKind::Periodic};
  return ex;
}

ExampleSpec s2_round() {
  ExampleSpec ex;
  ex.name = "s2-round";
  ex.sub.total = sphere2("s2", 1.0);
  ex.sub.base = sphere2("s2b", 1.0);
  ex.sub.proj = coord_projection(2, {0, 1});
  ex.triv = slot_trivialization(Chart{"s2-fiber", Eigen::VectorXd(0), Eigen::VectorXd(0)}, {},
                                {0, 1});
  ex.fiber_dim = 0;
  ex.fiber_chi = 1;
  ex.base_chi = 2;
  ex.total_axes = {AxisKind::Polar, AxisKind::Periodic};
  ex.base_axes = {AxisKind::Polar, AxisKind::Periodic};
  ex.fiber_axes = {};
  return ex;
}

ExampleSpec s2xs2(bool warped) {
  ExampleSpec ex;
  ex.name = warped ? "s2xs2-warped" : "s2xs2-product";
  MetricField total;
  total.chart = box("s2xs2", {0.0, 0.0, 0.0, 0.0}, {M_PI, 2.0 * M_PI, M_PI, 2.0 * M_PI});
  total.signature = Eigen::VectorXi::Constant(4, 1);
  total.eval = [warped](const JetVec& x) {
    JetMat g(4, 4);
    Jet3 f2 = warped ? (2.0 + cos(x[2])) * (2.0 + cos(x[2])) : Jet3(1.0);
    Jet3 sf = sin(x[0]);
    Jet3 sb = sin(x[2]);
    g(0, 0) = f2;
    g(1, 1) = f2 * sf * sf;
    g(2, 2) = Jet3(1.0);
    g(3, 3) = sb * sb;
    return g;
  };
  ex.sub.total = total;
  ex.sub.base = sphere2("s2base", 1.0);
  ex.sub.proj = coord_projection(4, {2, 3});
  ex.triv = slot_trivialization(box("s2-fiber", {0.0, 0.0}, {M_PI, 2.0 * M_PI}), {0, 1}, {2, 3});
  ex.fiber_dim = 2;
  ex.fiber_chi = 2;
  ex.base_chi = 2;
  ex.total_axes = {AxisKind::Polar, AxisKind::Periodic, AxisKind::Polar, AxisKind::Periodic};
  ex.base_axes = {AxisKind::Polar, AxisKind::Periodic};
  ex.fiber_axes = {AxisKind::Polar, AxisKind::Periodic};
  return ex;
}

ExampleSpec hopf() {
  ExampleSpec ex;
  ex.name = "hopf";
  MetricField total;
  total.chart = box("s3", {0.0, 0.0, 0.0}, {M_PI, 2.0 * M_PI, 4.0 * M_PI});
  total.signature = Eigen::VectorXi::Constant(3, 1);
  total.eval = [](const JetVec& x) { return s3_block(x[0]); };
  ex.sub.total = total;
  ex.sub.base = sphere2("s2half", 0.5);
  ex.sub.proj = coord_projection(3, {0, 1});
  ex.triv = slot_trivialization(box("s3-fiber", {0.0}, {4.0 * M_PI}), {2}, {0, 1});
  ex.fiber_dim = 1;
  ex.fiber_chi = 0;
  ex.base_chi = 2;
  ex.total_axes = {AxisKind::Polar, AxisKind::Periodic, AxisKind::Periodic};
  ex.base_axes = {AxisKind::Polar, AxisKind::Periodic};
  ex.fiber_axes = {AxisKind::Periodic};
  return ex;
}

ExampleSpec hopf_x_s1() {
  ExampleSpec ex;
  ex.name = "hopf-x-s1";
  MetricField total;
  total.chart = box("s3xs1", {0.0, 0.0, 0.0, 0.0}, {M_PI, 2.0 * M_PI, 4.0 * M_PI, 2.0 * M_PI});
  total.signature = Eigen::VectorXi::Constant(4, 1);
  total.eval = [](const JetVec& x) {
    JetMat g(4, 4);
    JetMat s3 = s3_block(x[0]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = s3(i, j);
    g(3, 3) = Jet3(1.0);
    return g;
  };
  ex.sub.total = total;
  ex.sub.base = sphere2("s2half", 0.5);
  ex.sub.proj = coord_projection(4, {0, 1});
  ex.triv = slot_trivialization(box("t2-fiber", {0.0, 0.0}, {4.0 * M_PI, 2.0 * M_PI}), {2, 3},
                                {0, 1});
  ex.fiber_dim = 2;
  ex.fiber_chi = 0;
  ex.base_chi = 2;
  ex.total_axes = {AxisKind::Polar, AxisKind::Periodic, AxisKind::Periodic, AxisKind::Periodic};
  ex.base_axes = {AxisKind::Polar, AxisKind::Periodic};
  ex.fiber_axes = {AxisKind::Periodic, AxisKind::Periodic};
  return ex;
}

ExampleSpec minkowski_trivial() {
  ExampleSpec ex;
  ex.name = "minkowski-trivial";
  ex.sub.total = euclidean("m3", 3, {-1, 1, 1});
  ex.sub.base = euclidean("r2b", 2);
  ex.sub.proj = coord_projection(3, {1, 2});
  ex.triv = slot_trivialization(Chart{"m3-fiber", dvec({-1.0}), dvec({1.0})}, {0}, {1, 2});
  ex.fiber_dim = 1;
  ex.fiber_chi = 1;
  ex.fiber_closed = false;
  ex.base_chi = 1;
  ex.base_closed = false;
  ex.total_axes = {AxisKind::Interval, AxisKind::Interval, AxisKind::Interval};
  ex.base_axes = {AxisKind::Interval, AxisKind::Interval};
  ex.fiber_axes = {AxisKind::Interval};
  return ex;
}

}  // namespace

const std::vector<std::string>& example_names() {
  static const std::vector<std::string> names = {
      "euclidean-product", "flat-torus-bundle", "s2-round",          "s2xs2-product",
      "s2xs2-warped",      "hopf",              "hopf-x-s1",         "minkowski-trivial"};
  return names;
}

ExampleSpec make_example(const std::string& name) {
  if (name == "euclidean-product") return euclidean_product();
  if (name == "flat-torus-bundle") return flat_torus_bundle();
  if (name == "s2-round") return s2_round();
  if (name == "s2xs2-product") return s2xs2(false);
  if (name == "s2xs2-warped") return s2xs2(true);
  if (name == "hopf") return hopf();
  if (name == "hopf-x-s1") return hopf_x_s1();
  if (name == "minkowski-trivial") return minkowski_trivial();
  throw DomainError("unknown example: " + name);
}

ResidualReport validate_example(const ExampleSpec& ex, int n_points, std::uint64_t seed,
                                double tol) {
  ResidualAccumulator acc;
  const int n = ex.sub.total.dim();
  const int b = ex.sub.proj.base_dim;
  // Point-level checks on the total space.
  for (const ChartPoint& p : sample_points(ex.sub.total.chart, n_points, seed)) {
    SubmersionJets sj = submersion_jets_at(ex.sub, p);
    Eigen::VectorXd yv = values_of(sj.y);
    for (int a = 0; a < b; ++a) {
      if (!(yv[a] > ex.sub.base.chart.lo[a] && yv[a] < ex.sub.base.chart.hi[a]))
        throw DomainError("projection leaves the base chart at a sample point");
    }
    Eigen::MatrixXd gB = values_of(metric_at(ex.sub.base, ChartPoint{ex.sub.base.chart.id, yv}, 0));
    Eigen::MatrixXd lhs = sj.dpiv.transpose() * gB * sj.dpiv;
    Eigen::MatrixXd rhs = sj.Hv.transpose() * sj.gv * sj.Hv;
    acc.add("horizontal_isometry", (lhs - rhs).cwiseAbs().maxCoeff(), p.x);

    int neg_frame = 0;
    for (int i = 0; i < n; ++i)
      if (sj.frame.signs[i] < 0) ++neg_frame;
    int neg_decl = 0;
    for (int i = 0; i < n; ++i)
      if (ex.sub.total.signature[i] < 0) ++neg_decl;
    acc.add("signature_count", std::abs(double(neg_frame - neg_decl)), p.x);
  }
  // Trivialization checks on (fiber, base) samples.
  {
    Rng rng(seed ^ 0xd1b54a32d192ed03ULL);
    const int fd = ex.fiber_dim;
    for (int it = 0; it < n_points; ++it) {
      Eigen::VectorXd t = fd > 0 ? sample_in_chart(ex.triv.fiber, rng) : Eigen::VectorXd(0);
      Eigen::VectorXd ysamp = sample_in_chart(ex.sub.base.chart, rng);
      Eigen::VectorXd ty(fd + b);
      ty << t, ysamp;
      JetVec x = ex.triv.embed(seed_coords(ty, 2));
      Eigen::VectorXd xv = values_of(x);
      for (int i = 0; i < n; ++i) {
        if (!(xv[i] > ex.sub.total.chart.lo[i] && xv[i] < ex.sub.total.chart.hi[i]))
          throw DomainError("trivialization leaves the total chart");
      }
      JetVec yback = ex.sub.proj.eval(x);
      double worst = (values_of(yback) - ysamp).cwiseAbs().maxCoeff();
      // D(pi after embed) must be [0 | I]: base slots pass through, fiber
      // slots are annihilated.
      for (int a = 0; a < b; ++a)
        for (int j = 0; j < fd + b; ++j) {
          const double want = (j == fd + a) ? 1.0 : 0.0;
          worst = std::max(worst, std::abs(yback[a].d1(j) - want));
        }
      acc.add("trivialization_section", worst, ty);
    }
  }
  return acc.finish(tol);
}

}  // namespace fibershrink
