#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fibershrink/jet.hpp"
#include "fibershrink/jet_linalg.hpp"
#include "support/oracles.hpp"

using fibershrink::Jet3;
using fibershrink::JetMat;

namespace {

std::vector<Jet3> seed_vec(const Eigen::VectorXd& x, int order = 3) {
  std::vector<Jet3> out;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) out.push_back(Jet3::variable(i, x(i), n, order));
  return out;
}

}  // namespace

TEST_CASE("coordinate seed") {
  const Jet3 x = Jet3::variable(0, 2.0, 2);
  CHECK(x.value() == 2.0);
  CHECK(x.d1(0) == 1.0);
  CHECK(x.d1(1) == 0.0);
  CHECK(x.d2(0, 0) == 0.0);
  CHECK(x.vars() == 2);
  CHECK(x.order() == 3);
  CHECK_THROWS_AS(Jet3::variable(2, 0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Jet3::variable(0, 0.0, 8), std::invalid_argument);
}

TEST_CASE("square of a coordinate") {
  const Jet3 x = Jet3::variable(0, 3.0, 1);
  const Jet3 sq = x * x;
  CHECK(sq.value() == doctest::Approx(9.0));
  CHECK(sq.d1(0) == doctest::Approx(6.0));
  CHECK(sq.d2(0, 0) == doctest::Approx(2.0));  // plain second partial, no 1/2! factor
  CHECK(sq.d3(0, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("sin at zero keeps plain-derivative normalization") {
  const Jet3 x = Jet3::variable(0, 0.0, 1);
  const Jet3 s = sin(x);
  CHECK(s.value() == doctest::Approx(0.0));
  CHECK(s.d1(0) == doctest::Approx(1.0));
  CHECK(s.d2(0, 0) == doctest::Approx(0.0));
  CHECK(s.d3(0, 0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("bivariate product") {
  const Jet3 x = Jet3::variable(0, 1.0, 2);
  const Jet3 y = Jet3::variable(1, 2.0, 2);
  const Jet3 p = x * y;
  CHECK(p.value() == doctest::Approx(2.0));
  CHECK(p.d1(0) == doctest::Approx(2.0));
  CHECK(p.d1(1) == doctest::Approx(1.0));
  CHECK(p.d2(0, 1) == doctest::Approx(1.0));
  CHECK(p.d2(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("extract_partial of x^2 y") {
  const Jet3 x = Jet3::variable(0, 1.3, 2);
  const Jet3 y = Jet3::variable(1, -0.4, 2);
  const Jet3 f = x * x * y;
  CHECK(extract_partial(f, {0, 0, 1}) == doctest::Approx(2.0));
  CHECK(extract_partial(f, {0, 1, 0}) == doctest::Approx(2.0));  // symmetric storage
  CHECK(extract_partial(f, {}) == doctest::Approx(1.3 * 1.3 * -0.4));
  CHECK_THROWS_AS(extract_partial(f, {0, 0, 0, 1}), std::invalid_argument);
}

TEST_CASE("random degree-3 polynomials reproduce symbolic partials") {
  fibershrink::Rng rng(2026);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 1 + rep % 4;
    const oracles::Poly p = oracles::Poly::random(n, 3, rng);
    const Eigen::VectorXd x0 = rng.vector(n, -1.5, 1.5);
    const Jet3 j = p.eval_jet(seed_vec(x0));
    double scale = 1.0;
    CHECK(j.value() == doctest::Approx(p.eval(x0)).epsilon(1e-13));
    for (int i = 0; i < n; ++i) {
      const oracles::Poly pi = p.derive(i);
      scale = std::max(scale, std::abs(pi.eval(x0)));
      CHECK(j.d1(i) == doctest::Approx(pi.eval(x0)).epsilon(1e-12));
      for (int jj = i; jj < n; ++jj) {
        const oracles::Poly pij = pi.derive(jj);
        CHECK(j.d2(i, jj) == doctest::Approx(pij.eval(x0)).epsilon(1e-12));
        for (int k = jj; k < n; ++k)
          CHECK(j.d3(i, jj, k) == doctest::Approx(pij.derive(k).eval(x0)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("exp jet against central differences") {
  const Jet3 x = Jet3::variable(0, 0.7, 1);
  const Jet3 e = exp(x);
  const oracles::ScalarFn f = [](const Eigen::VectorXd& v) { return std::exp(v(0)); };
  Eigen::VectorXd x0(1);
  x0 << 0.7;
  const double fd = oracles::fd1(f, x0, 0, 1e-4);
  CHECK(std::abs(e.d1(0) - fd) / std::abs(fd) < 1e-6);
  CHECK(std::abs(e.d2(0, 0) - oracles::fd2(f, x0, 0, 0, 1e-4)) < 1e-5);
  CHECK(std::abs(e.d3(0, 0, 0) - oracles::fd3(f, x0, 0, 0, 0, 1e-3)) < 1e-4);
}

TEST_CASE("composite expression against finite differences") {
  const oracles::ScalarFn f = [](const Eigen::VectorXd& v) {
    return std::sin(v(0) * v(1)) + std::exp(v(0) / (std::cos(v(1)) + 2.0));
  };
  fibershrink::Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd x0 = rng.vector(2, -1.0, 1.0);
    const auto s = seed_vec(x0);
    const Jet3 j = sin(s[0] * s[1]) + exp(s[0] / (cos(s[1]) + 2.0));
    CHECK(j.value() == doctest::Approx(f(x0)).epsilon(1e-13));
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(j.d1(i) - oracles::fd1(f, x0, i, 1e-4)) < 1e-5);
      for (int jj = i; jj < 2; ++jj) {
        CHECK(std::abs(j.d2(i, jj) - oracles::fd2(f, x0, i, jj, 1e-4)) < 1e-5);
        for (int k = jj; k < 2; ++k)
          CHECK(std::abs(j.d3(i, jj, k) - oracles::fd3(f, x0, i, jj, k, 1e-3)) < 1e-3);
      }
    }
  }
}

TEST_CASE("quotient partials") {
  const Jet3 x = Jet3::variable(0, 3.0, 2);
  const Jet3 y = Jet3::variable(1, 2.0, 2);
  const Jet3 q = x / y;
  CHECK(q.value() == doctest::Approx(1.5));
  CHECK(q.d1(0) == doctest::Approx(0.5));
  CHECK(q.d1(1) == doctest::Approx(-0.75));
  CHECK(q.d2(0, 1) == doctest::Approx(-0.25));
  CHECK(q.d2(1, 1) == doctest::Approx(0.75));
  CHECK(q.d3(1, 1, 1) == doctest::Approx(-1.125));
  CHECK(q.d3(0, 1, 1) == doctest::Approx(0.25));
}

TEST_CASE("sqrt partials and domain guard") {
  const Jet3 x = Jet3::variable(0, 4.0, 1);
  const Jet3 r = sqrt(x);
  CHECK(r.value() == doctest::Approx(2.0));
  CHECK(r.d1(0) == doctest::Approx(0.25));
  CHECK(r.d2(0, 0) == doctest::Approx(-1.0 / 32.0));
  CHECK(r.d3(0, 0, 0) == doctest::Approx(3.0 / 256.0));
  CHECK_THROWS_AS(sqrt(Jet3::variable(0, 0.0, 1)), fibershrink::DomainError);
  CHECK_THROWS_AS(sqrt(Jet3::variable(0, -1.0, 1)), fibershrink::DomainError);
}

TEST_CASE("division by vanishing jet") {
  const Jet3 x = Jet3::variable(0, 0.0, 1);
  CHECK_THROWS_AS(Jet3(1.0) / x, fibershrink::SingularPointError);
  CHECK_THROWS_AS(x / 0.0, fibershrink::SingularPointError);
}

TEST_CASE("integer powers") {
  const Jet3 x = Jet3::variable(0, 2.0, 1);
  const Jet3 p5 = pow(x, 5);
  CHECK(p5.value() == doctest::Approx(32.0));
  CHECK(p5.d1(0) == doctest::Approx(80.0));
  CHECK(p5.d2(0, 0) == doctest::Approx(160.0));
  CHECK(p5.d3(0, 0, 0) == doctest::Approx(240.0));
  const Jet3 pm2 = pow(x, -2);
  CHECK(pm2.value() == doctest::Approx(0.25));
  CHECK(pm2.d1(0) == doctest::Approx(-0.25));
  CHECK(pm2.d2(0, 0) == doctest::Approx(0.375));
  CHECK(pm2.d3(0, 0, 0) == doctest::Approx(-0.75));
  CHECK(pow(x, 0).value() == doctest::Approx(1.0));
}

TEST_CASE("derivative shift agrees with symbolic derivative") {
  fibershrink::Rng rng(11);
  const oracles::Poly p = oracles::Poly::random(3, 3, rng);
  const Eigen::VectorXd x0 = rng.vector(3, -1.0, 1.0);
  const Jet3 f = p.eval_jet(seed_vec(x0));
  for (int i = 0; i < 3; ++i) {
    const Jet3 df = deriv(f, i);
    const oracles::Poly dp = p.derive(i);
    CHECK(df.order() == 2);
    CHECK(df.value() == doctest::Approx(dp.eval(x0)).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) {
      CHECK(df.d1(j) == doctest::Approx(dp.derive(j).eval(x0)).epsilon(1e-12));
      for (int k = j; k < 3; ++k)
        CHECK(df.d2(j, k) == doctest::Approx(dp.derive(j).derive(k).eval(x0)).epsilon(1e-11));
    }
  }
}

TEST_CASE("multivariate composition") {
  fibershrink::Rng rng(13);
  const oracles::Poly h = oracles::Poly::random(2, 3, rng);
  const oracles::Poly a0 = oracles::Poly::random(3, 2, rng);
  const oracles::Poly a1 = oracles::Poly::random(3, 2, rng);
  const Eigen::VectorXd x0 = rng.vector(3, -0.8, 0.8);
  const auto xs = seed_vec(x0);
  const std::vector<Jet3> args = {a0.eval_jet(xs), a1.eval_jet(xs)};

  Eigen::VectorXd y0(2);
  y0 << args[0].value(), args[1].value();
  const Jet3 hj = h.eval_jet(seed_vec(y0));

  const Jet3 got = compose(hj, args);
  const Jet3 want = [&] {  // substitute the inner jets into h directly
    std::vector<Jet3> sub = {args[0], args[1]};
    return h.eval_jet(sub);
  }();
  CHECK(got.vars() == 3);
  CHECK(got.value() == doctest::Approx(want.value()).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(got.d1(i) == doctest::Approx(want.d1(i)).epsilon(1e-11));
    for (int j = i; j < 3; ++j) {
      CHECK(got.d2(i, j) == doctest::Approx(want.d2(i, j)).epsilon(1e-10));
      for (int k = j; k < 3; ++k)
        CHECK(got.d3(i, j, k) ==
              doctest::Approx(want.d3(i, j, k)).epsilon(1e-9).scale(1.0 + std::abs(want.d3(i, j, k))));
    }
  }
}

TEST_CASE("constants broadcast") {
  const Jet3 c = Jet3(3.0) * Jet3(4.0);
  CHECK(c.vars() == 0);
  CHECK(c.value() == doctest::Approx(12.0));
  const Jet3 x = Jet3::variable(0, 1.0, 3);
  const Jet3 s = c + 2.0 * x;
  CHECK(s.vars() == 3);
  CHECK(s.value() == doctest::Approx(14.0));
  CHECK(s.d1(0) == doctest::Approx(2.0));
}

TEST_CASE("mixed variable counts rejected") {
  const Jet3 a = Jet3::variable(0, 1.0, 2);
  const Jet3 b = Jet3::variable(0, 1.0, 3);
  CHECK_THROWS_AS(a + b, std::logic_error);
  CHECK_THROWS_AS(a * b, std::logic_error);
}

TEST_CASE("order caps propagate") {
  const Jet3 x2 = Jet3::variable(0, 0.5, 1, 2);
  const Jet3 y3 = Jet3::variable(0, 0.25, 1, 3);
  CHECK((x2 * y3).order() == 2);
  CHECK(deriv(x2, 0).order() == 1);
  CHECK_THROWS_AS(extract_partial(x2, {0, 0, 0}), std::logic_error);
  const Jet3 p = x2 * x2 * x2;
  CHECK(p.order() == 2);
  CHECK(p.d2(0, 0) == doctest::Approx(6.0 * 0.5));  // (x^3)'' at x = 1/2
}

TEST_CASE("jet matrices through Eigen") {
  const Jet3 x = Jet3::variable(0, 0.3, 2);
  const Jet3 y = Jet3::variable(1, -0.6, 2);
  JetMat A(2, 2), B(2, 2);
  A << x, y, y, x;
  B << x * x, Jet3(1.0), sin(y), cos(x);
  const JetMat C = A * B;
  const Jet3 c00 = x * (x * x) + y * sin(y);
  CHECK(C(0, 0).value() == doctest::Approx(c00.value()).epsilon(1e-13));
  CHECK(C(0, 0).d1(0) == doctest::Approx(c00.d1(0)).epsilon(1e-12));
  CHECK(C(0, 0).d3(0, 0, 1) == doctest::Approx(c00.d3(0, 0, 1)).epsilon(1e-12));
  const JetMat D = A + A;
  CHECK(D(1, 0).d1(1) == doctest::Approx(2.0 * y.d1(1)));
  const JetMat E = A * 2.0;
  CHECK(E(0, 0).value() == doctest::Approx(0.6));
  JetMat Z(2, 2);
  CHECK(Z(0, 0).value() == 0.0);  // default entries are exact-zero constants
  CHECK(Z(0, 0).vars() == 0);
}

TEST_CASE("jet matrix inverse tracks derivative of the inverse") {
  using fibershrink::jet_identity;
  using fibershrink::jet_inverse;
  const Jet3 t = Jet3::variable(0, 0.4, 1);
  JetMat A(2, 2);
  A << cos(t), sin(t) * 0.5, sin(t) * 0.5, Jet3(2.0) + t * t;
  const JetMat Ainv = jet_inverse(A);
  const JetMat P = A * Ainv;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      CHECK(P(i, j).value() == doctest::Approx(want).epsilon(1e-12));
      CHECK(P(i, j).d1(0) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
      CHECK(P(i, j).d3(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    }
  // d(A^-1)/dt = -A^-1 (dA/dt) A^-1
  Eigen::MatrixXd Av(2, 2), dAv(2, 2), Iv(2, 2), dIv(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Av(i, j) = A(i, j).value();
      dAv(i, j) = A(i, j).d1(0);
      Iv(i, j) = Ainv(i, j).value();
      dIv(i, j) = Ainv(i, j).d1(0);
    }
  const Eigen::MatrixXd want = -Iv * dAv * Iv;
  CHECK((dIv - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jet inverse rejects singular input") {
  JetMat A(2, 2);
  A << Jet3(1.0), Jet3(2.0), Jet3(2.0), Jet3(4.0);
  CHECK_THROWS_AS(fibershrink::jet_inverse(A), fibershrink::SingularMetricError);
}

TEST_CASE("kernel basis of a coordinate projection differential") {
  JetMat D(2, 4);
  D(0, 0) = Jet3(1.0);
  D(1, 1) = Jet3(1.0);
  const JetMat K = fibershrink::jet_kernel_basis(D);
  REQUIRE(K.cols() == 2);
  CHECK(K(2, 0).value() == doctest::Approx(1.0));
  CHECK(K(3, 1).value() == doctest::Approx(1.0));
  CHECK(K(0, 0).value() == doctest::Approx(0.0));
  // nontrivial row mixing
  const Jet3 t = Jet3::variable(0, 0.3, 1);
  JetMat D2(1, 2);
  D2(0, 0) = cos(t);
  D2(0, 1) = sin(t) + 2.0;
  const JetMat K2 = fibershrink::jet_kernel_basis(D2);
  REQUIRE(K2.cols() == 1);
  const Jet3 r0 = D2(0, 0) * K2(0, 0) + D2(0, 1) * K2(1, 0);
  CHECK(r0.value() == doctest::Approx(0.0).epsilon(1e-13).scale(1.0));
  CHECK(r0.d1(0) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(r0.d3(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
}

TEST_CASE("full-rank matrix has empty kernel") {
  JetMat A(2, 2);
  A << Jet3(1.0), Jet3(1.0), Jet3(0.0), Jet3(1.0);
  CHECK(fibershrink::jet_kernel_basis(A).cols() == 0);
}
