#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "fibershrink/errors.hpp"
#include "fibershrink/examples.hpp"
#include "fibershrink/forms.hpp"
#include "fibershrink/sampling.hpp"
#include "fibershrink/variation.hpp"
#include "support/test_metrics.hpp"

using namespace fibershrink;

namespace {

ChartPoint pt(const Chart& c, std::initializer_list<double> xs) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double v : xs) x[i++] = v;
  return ChartPoint{c.id, x};
}

Eigen::MatrixXd random_antisymmetric(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = u(gen);
      a(j, i) = -a(i, j);
    }
  return a;
}

/// Congruence transform of a matrix of forms by a scalar matrix:
/// out(i, j) = sum_{a,b} q(a, i) q(b, j) m(a, b).
FormMatrix congruence(const FormMatrix& m, const Eigen::MatrixXd& q) {
  FormMatrix out(m.rows(), m.cols(), m.dim(), m.degree());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) out.at(i, j) += q(a, i) * q(b, j) * m.at(a, b);
  return out;
}

double max_entry_diff(const FormMatrix& a, const FormMatrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      worst = std::max(worst, (a.at(i, j) - b.at(i, j)).max_abs_coeff());
  return worst;
}

ChartPoint base_point_of(const SubmersionSpec& s, const ChartPoint& p) {
  return ChartPoint{s.base.chart.id, values_of(s.proj.eval(seed_coords(p.x, 1)))};
}

}  // namespace

TEST_CASE("wedge products follow the graded sign rules") {
  ExteriorForm dx = ExteriorForm::coordinate(4, {0});
  ExteriorForm dy = ExteriorForm::coordinate(4, {1});
  ExteriorForm du = ExteriorForm::coordinate(4, {2});
  ExteriorForm dv = ExteriorForm::coordinate(4, {3});

  CHECK(wedge(dx, dx).max_abs_coeff() == 0.0);
  CHECK((wedge(dx, dy) + wedge(dy, dx)).max_abs_coeff() == 0.0);

  ExteriorForm dxdy = wedge(dx, dy), dudv = wedge(du, dv);
  CHECK((wedge(dxdy, dudv) - wedge(dudv, dxdy)).max_abs_coeff() == 0.0);
  CHECK(wedge(dxdy, dudv).coeff({0, 1, 2, 3}) == 1.0);

  // Interleaved factors pick up the crossing parity: dx^du then dy^dv needs
  // one transposition to sort (0,2,1,3).
  CHECK(wedge(wedge(dx, du), wedge(dy, dv)).coeff({0, 1, 2, 3}) == -1.0);

  // Degree overflow is the zero form, not an error.
  ExteriorForm top = wedge(dxdy, dudv);
  ExteriorForm over = wedge(top, dx);
  CHECK(over.degree() == 5);
  CHECK(over.max_abs_coeff() == 0.0);
}

TEST_CASE("form evaluation alternates and matches coefficient sums") {
  ExteriorForm dxdy = ExteriorForm::coordinate(3, {0, 1});
  Eigen::VectorXd X = fstest::vec3(2.0, 3.0, -1.0), Y = fstest::vec3(0.5, -2.0, 4.0);
  CHECK(dxdy.evaluate({X, Y}) == doctest::Approx(2.0 * -2.0 - 3.0 * 0.5).epsilon(1e-14));
  CHECK(dxdy.evaluate({X, X}) == 0.0);
  CHECK(dxdy.evaluate({X, Y}) == doctest::Approx(-dxdy.evaluate({Y, X})).epsilon(1e-14));

  ExteriorForm f(3, 2);
  f.set_coeff({0, 1}, 1.5);
  f.set_coeff({0, 2}, -0.25);
  f.set_coeff({1, 2}, 2.0);
  double manual = 1.5 * (X[0] * Y[1] - X[1] * Y[0]) - 0.25 * (X[0] * Y[2] - X[2] * Y[0]) +
                  2.0 * (X[1] * Y[2] - X[2] * Y[1]);
  CHECK(f.evaluate({X, Y}) == doctest::Approx(manual).epsilon(1e-14));
}

TEST_CASE("coefficient storage round trips and serializes") {
  ExteriorForm f(4, 2);
  f.set_coeff({1, 3}, -0.5);
  f.set_coeff({0, 2}, 2.0);
  CHECK(f.coeff({1, 3}) == -0.5);
  CHECK(f.coeff({0, 1}) == 0.0);
  CHECK(f.coeff({0, 1, 2}) == 0.0);  // wrong length reads as zero
  CHECK_THROWS_AS(f.set_coeff({3, 1}, 1.0), FormAlgebraError);
  CHECK_THROWS_AS(f.set_coeff({0}, 1.0), FormAlgebraError);

  auto entries = f.entries();
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].first == std::vector<int>{0, 2});
  CHECK(entries[0].second == 2.0);
  CHECK(entries[1].first == std::vector<int>{1, 3});

  CHECK(to_json_string(f) == "{\"degree\":2,\"entries\":[[[0,2],2],[[1,3],-0.5]]}");
  CHECK(to_json_string(ExteriorForm(2, 1)) == "{\"degree\":1,\"entries\":[]}");
}

TEST_CASE("form arithmetic requires matching shapes") {
  CHECK_THROWS_AS(ExteriorForm(3, 1) + ExteriorForm(3, 2), FormAlgebraError);
  CHECK_THROWS_AS(ExteriorForm(3, 1) + ExteriorForm(4, 1), FormAlgebraError);
  CHECK_THROWS_AS(wedge(ExteriorForm(3, 1), ExteriorForm(4, 1)), FormAlgebraError);
  CHECK_THROWS_AS(ExteriorForm(13, 0), FormAlgebraError);  // dense storage cap
}

TEST_CASE("pfaffian matches the classical small cases") {
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(2, 2);
  a2(0, 1) = 1.75;
  a2(1, 0) = -1.75;
  CHECK(pfaffian(a2) == 1.75);

  Eigen::MatrixXd a4 = random_antisymmetric(4, 5);
  double classical = a4(0, 1) * a4(2, 3) - a4(0, 2) * a4(1, 3) + a4(0, 3) * a4(1, 2);
  CHECK(pfaffian(a4) == doctest::Approx(classical).epsilon(1e-14));

  // Pf(A)^2 = det(A) for antisymmetric matrices.
  CHECK(pfaffian(a4) * pfaffian(a4) == doctest::Approx(a4.determinant()).epsilon(1e-12));

  CHECK_THROWS_AS(pfaffian(Eigen::MatrixXd::Zero(3, 3)), FormParityError);
  CHECK_THROWS_AS(pfaffian(FormMatrix(3, 3, 4, 2)), FormParityError);
  CHECK_THROWS_AS(pfaffian(FormMatrix(2, 2, 4, 1)), FormAlgebraError);  // odd degree
}

TEST_CASE("pfaffian is block multiplicative") {
  Eigen::MatrixXd a = random_antisymmetric(2, 11), b = random_antisymmetric(4, 13);
  Eigen::MatrixXd blockdiag = Eigen::MatrixXd::Zero(6, 6);
  blockdiag.topLeftCorner(2, 2) = a;
  blockdiag.bottomRightCorner(4, 4) = b;
  CHECK(pfaffian(blockdiag) == doctest::Approx(pfaffian(a) * pfaffian(b)).epsilon(1e-12));
}

TEST_CASE("pfaffian recursion agrees with the permutation sum") {
  for (int n : {2, 4, 6})
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      Eigen::MatrixXd a = random_antisymmetric(n, seed);
      CHECK(std::abs(pfaffian(a) - pfaffian_permutation_sum(a)) < 1e-12);
    }
  // Degree-0 form matrices reduce to the scalar computation.
  Eigen::MatrixXd a = random_antisymmetric(4, 21);
  FormMatrix fa(4, 4, 2, 0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) fa.at(i, j) = ExteriorForm::constant(2, a(i, j));
  CHECK(pfaffian(fa).coeff_mask(0) == doctest::Approx(pfaffian(a)).epsilon(1e-14));
}

TEST_CASE("euler form of the round sphere is the normalized area form") {
  MetricField s2 = fstest::round_s2();
  for (const ChartPoint& p : sample_points(s2.chart, 10, 3)) {
    ExteriorForm e = euler_form_at(s2, p);
    CHECK(e.degree() == 2);
    CHECK(e.coeff({0, 1}) ==
          doctest::Approx(std::sin(p.x[0]) / (2.0 * M_PI)).epsilon(1e-12));
  }
}

TEST_CASE("curvature forms vanish on flat bundles") {
  ExampleSpec ex = make_example("euclidean-product");
  ChartPoint p = pt(ex.sub.total.chart, {0.2, -0.3, 0.4, 0.1});
  CHECK(curvature_form_at(ex.sub, p).omega.max_abs_coeff() == 0.0);
  CHECK(curvature_form_at(make_varied_metric(ex.sub, 0.5), p).omega.max_abs_coeff() == 0.0);

  ExampleSpec torus = make_example("flat-torus-bundle");
  for (const ChartPoint& q : sample_points(torus.sub.total.chart, 4, 9))
    CHECK(mixed_block(curvature_form_at(torus.sub, q)).max_abs_coeff() < 1e-13);
}

TEST_CASE("product bundle splits the curvature form into blocks") {
  ExampleSpec ex = make_example("s2xs2-product");
  for (const ChartPoint& p : sample_points(ex.sub.total.chart, 6, 17)) {
    CurvatureFormMatrix cf = curvature_form_at(ex.sub, p);
    CHECK(mixed_block(cf).max_abs_coeff() == 0.0);
    CHECK(max_entry_diff(vertical_block(cf), fiber_curvature_form_at(ex.sub, p)) < 1e-13);

    CurvatureFormMatrix ob = curvature_form_at(ex.sub.base, base_point_of(ex.sub, p));
    FormMatrix pulled = pullback(ob.omega, ex.sub.proj, p);
    CHECK(max_entry_diff(horizontal_block(cf), pulled) < 1e-12);

    ExteriorForm e4 = euler_form_at(make_varied_metric(ex.sub, 0.0), p);
    CHECK(e4.coeff({0, 1, 2, 3}) ==
          doctest::Approx(std::sin(p.x[0]) * std::sin(p.x[2]) / std::pow(2.0 * M_PI, 2))
              .epsilon(1e-10));
  }
}

TEST_CASE("curvature form matrices are antisymmetric in the frame indices") {
  ExampleSpec w = make_example("s2xs2-warped");
  ExampleSpec hopf = make_example("hopf");
  for (const ChartPoint& p : sample_points(w.sub.total.chart, 5, 29)) {
    CurvatureFormMatrix cf = curvature_form_at(make_varied_metric(w.sub, 0.7), p);
    for (int i = 0; i < cf.n(); ++i)
      for (int j = 0; j < cf.n(); ++j)
        CHECK((cf.omega.at(i, j) + cf.omega.at(j, i)).max_abs_coeff() < 1e-10);
  }
  for (const ChartPoint& p : sample_points(hopf.sub.total.chart, 5, 31)) {
    CurvatureFormMatrix cf = curvature_form_at(hopf.sub, p);
    for (int i = 0; i < cf.n(); ++i)
      for (int j = 0; j < cf.n(); ++j)
        CHECK((cf.omega.at(i, j) + cf.omega.at(j, i)).max_abs_coeff() < 1e-10);
  }
}

TEST_CASE("mixed block decays at least linearly in the shrink remainder") {
  // The warped example realizes the guaranteed rate exactly: ratio 10 between
  // shrink remainders 0.1 and 0.01.  The circle fibration collapses three
  // orders per decade (its constant-curvature total space cancels the limit
  // bracket), which still satisfies the same bound.
  ExampleSpec w = make_example("s2xs2-warped");
  for (const ChartPoint& p : sample_points(w.sub.total.chart, 5, 37)) {
    double m1 = mixed_block(curvature_form_at(make_varied_metric(w.sub, 0.9), p)).max_abs_coeff();
    double m2 = mixed_block(curvature_form_at(make_varied_metric(w.sub, 0.99), p)).max_abs_coeff();
    REQUIRE(m2 > 0.0);
    CHECK(m1 / m2 == doctest::Approx(10.0).epsilon(0.2));
  }
  ExampleSpec hopf = make_example("hopf");
  for (const ChartPoint& p : sample_points(hopf.sub.total.chart, 5, 37)) {
    double m1 =
        mixed_block(curvature_form_at(make_varied_metric(hopf.sub, 0.9), p)).max_abs_coeff();
    double m2 =
        mixed_block(curvature_form_at(make_varied_metric(hopf.sub, 0.99), p)).max_abs_coeff();
    REQUIRE(m2 > 0.0);
    CHECK(m1 / m2 >= 10.0 * 0.8);
  }
}

TEST_CASE("scaled pfaffian approaches the split wedge product") {
  ExampleSpec w = make_example("s2xs2-warped");
  for (const ChartPoint& p : sample_points(w.sub.total.chart, 4, 41)) {
    CurvatureFormMatrix ob = curvature_form_at(w.sub.base, base_point_of(w.sub, p));
    ExteriorForm target = wedge(pfaffian(fiber_curvature_form_at(w.sub, p)),
                                pullback(pfaffian(ob.omega), w.sub.proj, p));
    auto defect = [&](double eps) {
      return (pfaffian(curvature_form_at(make_varied_metric(w.sub, eps), p).omega) - target)
          .max_abs_coeff();
    };
    double d1 = defect(0.9), d2 = defect(0.99);
    REQUIRE(d2 > 0.0);
    // Decay order in (1 - eps) across one decade; the Corollary guarantees
    // order >= 1 and the block structure delivers 2.
    CHECK(std::log10(d1 / d2) >= 1.0);
    CHECK(d2 < 1e-3);
  }
}

TEST_CASE("pullback feeds the differential to base forms") {
  ExampleSpec hopf = make_example("hopf");
  ChartPoint p = pt(hopf.sub.total.chart, {M_PI / 3.0, 1.0, 2.0});

  ExteriorForm half = ExteriorForm::constant(2, 0.5);
  CHECK(pullback(half, hopf.sub.proj, p).coeff_mask(0) == 0.5);

  // The pulled-back base area form annihilates vertical vectors.
  Eigen::MatrixXd gB =
      values_of(metric_at(hopf.sub.base, base_point_of(hopf.sub, p), 1));
  ExteriorForm area(2, 2);
  area.set_coeff({0, 1}, std::sqrt(gB.determinant()));
  ExteriorForm pa = pullback(area, hopf.sub.proj, p);
  SubmersionJets sj = submersion_jets_at(hopf.sub, p);
  Rng rng(43);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd V = sj.Vv * rng.vector(3, -1.0, 1.0);
    Eigen::VectorXd W = rng.vector(3, -1.0, 1.0);
    CHECK(std::abs(pa.evaluate({V, W})) < 1e-12);
  }
  CHECK(pa.max_abs_coeff() > 1e-3);  // the pullback itself is not zero

  CHECK_THROWS_AS(pullback(ExteriorForm(3, 1), hopf.sub.proj, p), FormAlgebraError);
}

TEST_CASE("frame rotation leaves the pfaffian unchanged") {
  ExampleSpec w = make_example("s2xs2-warped");
  ChartPoint p = pt(w.sub.total.chart, {1.2, 0.8, 1.9, 2.5});
  CurvatureFormMatrix cf = curvature_form_at(make_varied_metric(w.sub, 0.6), p);
  ExteriorForm pf = pfaffian(cf.omega);
  for (double av : {0.3, 1.2})
    for (double ah : {-0.8, 2.1}) {
      Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 4);
      q.topLeftCorner(2, 2) << std::cos(av), -std::sin(av), std::sin(av), std::cos(av);
      q.bottomRightCorner(2, 2) << std::cos(ah), -std::sin(ah), std::sin(ah), std::cos(ah);
      CHECK((pfaffian(congruence(cf.omega, q)) - pf).max_abs_coeff() < 1e-10);
    }
}

TEST_CASE("euler form rejects unsupported signatures and parities") {
  // Flat 4d metric of signature (-, +, +, +): even dimension, so the
  // signature guard is what fires.
  MetricField mink4;
  mink4.chart = Chart{"mink4", Eigen::VectorXd::Constant(4, -1.0),
                      Eigen::VectorXd::Constant(4, 1.0)};
  mink4.signature = (Eigen::VectorXi(4) << -1, 1, 1, 1).finished();
  mink4.eval = [](const JetVec&) {
    JetMat g(4, 4);
    g(0, 0) = Jet3(-1.0);
    for (int i = 1; i < 4; ++i) g(i, i) = Jet3(1.0);
    return g;
  };
  ChartPoint mp = pt(mink4.chart, {0.3, -0.2, 0.4, 0.1});
  CHECK_THROWS_AS(euler_form_at(mink4, mp), UnsupportedSignatureError);

  // Odd total dimension trips the parity guard first.
  ExampleSpec mink = make_example("minkowski-trivial");
  ChartPoint mp3 = pt(mink.sub.total.chart, {0.3, -0.2, 0.4});
  CHECK_THROWS_AS(euler_form_at(make_varied_metric(mink.sub, 0.5), mp3), FormParityError);

  ExampleSpec hopf = make_example("hopf");
  ChartPoint hp = pt(hopf.sub.total.chart, {M_PI / 3.0, 1.0, 2.0});
  CHECK_THROWS_AS(euler_form_at(make_varied_metric(hopf.sub, 0.5), hp), FormParityError);
}
