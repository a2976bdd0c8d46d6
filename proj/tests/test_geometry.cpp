#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fibershrink/errors.hpp"
#include "fibershrink/geometry.hpp"
#include "fibershrink/jet_linalg.hpp"
#include "fibershrink/sampling.hpp"
#include "support/geom_oracles.hpp"
#include "support/test_metrics.hpp"

using namespace fibershrink;

namespace {

double max_abs_diff(const std::vector<JetMat>& gamma, const std::vector<Eigen::MatrixXd>& ref) {
  double worst = 0.0;
  const int n = static_cast<int>(gamma.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        worst = std::max(worst, std::abs(gamma[i](j, k).value() - ref[i](j, k)));
  return worst;
}

double max_abs_diff(const Riemann4& a, const Riemann4& b) {
  double worst = 0.0;
  const int n = a.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          worst = std::max(worst, std::abs(a.at(i, j, k, l) - b.at(i, j, k, l)));
  return worst;
}

double sectional(const MetricField& m, const ChartPoint& p, const Eigen::VectorXd& X,
                 const Eigen::VectorXd& Y) {
  MetricJets mj = metric_jets_at(m, p);
  Riemann4 R = riemann_from_connection(connection_matrices(mj.gamma));
  Eigen::MatrixXd g = values_of(mj.g);
  const double num = X.dot(g * (R.apply(X, Y) * Y));
  const double den = X.dot(g * X) * Y.dot(g * Y) - std::pow(X.dot(g * Y), 2);
  return num / den;
}

JetMat smooth_tensor_field(const JetVec& x) {
  const int n = static_cast<int>(x.size());
  JetMat T(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) T(i, j) = sin(x[(i + j) % n] + 0.4 * i - 0.2 * j);
  return T;
}

}  // namespace

TEST_CASE("round sphere christoffels at a fixed point") {
  MetricField s2 = fstest::round_s2();
  ChartPoint p{"s2", fstest::vec2(M_PI / 3.0, 1.0)};
  auto gamma = christoffels_at(s2, p);
  CHECK(gamma[0](1, 1).value() == doctest::Approx(-0.4330127018922193).epsilon(1e-12));
  CHECK(gamma[1](0, 1).value() == doctest::Approx(0.5773502691896258).epsilon(1e-12));
  CHECK(gamma[1](1, 0).value() == doctest::Approx(0.5773502691896258).epsilon(1e-12));
  CHECK(std::abs(gamma[0](0, 0).value()) < 1e-14);
  CHECK(std::abs(gamma[0](0, 1).value()) < 1e-14);
  CHECK(std::abs(gamma[1](0, 0).value()) < 1e-14);
  CHECK(std::abs(gamma[1](1, 1).value()) < 1e-14);
}

TEST_CASE("christoffels agree with metric-value finite differences") {
  for (const MetricField& m : {fstest::bumpy3(), fstest::round_s3(), fstest::warped_s2xs2()}) {
    auto fn = fstest::value_fn(m);
    for (const ChartPoint& p : sample_points(m.chart, 6, 71)) {
      auto gamma = christoffels_at(m, p);
      auto ref = fstest::christoffels_fd(fn, p.x);
      CHECK(max_abs_diff(gamma, ref) < 1e-5);
    }
  }
}

TEST_CASE("riemann agrees with metric-value finite differences") {
  for (const MetricField& m : {fstest::bumpy3(), fstest::round_s3(), fstest::warped_s2xs2()}) {
    auto fn = fstest::value_fn(m);
    for (const ChartPoint& p : sample_points(m.chart, 3, 72)) {
      Riemann4 R = riemann_at(m, p);
      Riemann4 ref = fstest::riemann_fd(fn, p.x);
      CHECK(max_abs_diff(R, ref) < 1e-5);
    }
  }
}

TEST_CASE("levi-civita connection kills the metric") {
  for (const MetricField& m : {fstest::bumpy3(), fstest::warped_s2xs2()}) {
    const int n = m.dim();
    for (const ChartPoint& p : sample_points(m.chart, 4, 73)) {
      MetricJets mj = metric_jets_at(m, p);
      Eigen::MatrixXd gv = values_of(mj.g);
      for (int k = 0; k < n; ++k) {
        Eigen::MatrixXd nabla_g = d1_of(mj.g, k);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int mm = 0; mm < n; ++mm)
              nabla_g(i, j) -= mj.gamma[mm](k, i).value() * gv(mm, j) +
                              mj.gamma[mm](k, j).value() * gv(i, mm);
        CHECK(nabla_g.cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("flat metrics have zero connection and curvature") {
  for (const MetricField& m : {fstest::euclid(4), fstest::minkowski3()}) {
    ChartPoint p{m.chart.id, Eigen::VectorXd::Constant(m.dim(), 0.2)};
    auto gamma = christoffels_at(m, p);
    for (const auto& gi : gamma) CHECK(values_of(gi).cwiseAbs().maxCoeff() < 1e-14);
    Riemann4 R = riemann_at(m, p);
    double worst = 0.0;
    for (int i = 0; i < m.dim(); ++i)
      for (int j = 0; j < m.dim(); ++j)
        for (int k = 0; k < m.dim(); ++k)
          for (int l = 0; l < m.dim(); ++l) worst = std::max(worst, std::abs(R.at(i, j, k, l)));
    CHECK(worst < 1e-14);
  }
}

TEST_CASE("unit spheres have sectional curvature one") {
  MetricField s2 = fstest::round_s2();
  Rng rng(2024);
  for (const ChartPoint& p : sample_points(s2.chart, 20, 74)) {
    Eigen::VectorXd X = rng.vector(2, -1.0, 1.0), Y = rng.vector(2, -1.0, 1.0);
    CHECK(sectional(s2, p, X, Y) == doctest::Approx(1.0).epsilon(1e-9));
  }
  MetricField s3 = fstest::round_s3();
  for (const ChartPoint& p : sample_points(s3.chart, 10, 75)) {
    Eigen::VectorXd X = rng.vector(3, -1.0, 1.0), Y = rng.vector(3, -1.0, 1.0);
    CHECK(sectional(s3, p, X, Y) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("curvature has the classical symmetries") {
  MetricField m = fstest::warped_s2xs2();
  Rng rng(99);
  for (const ChartPoint& p : sample_points(m.chart, 3, 76)) {
    MetricJets mj = metric_jets_at(m, p);
    Riemann4 R = riemann_from_connection(connection_matrices(mj.gamma));
    Eigen::MatrixXd g = values_of(mj.g);
    Eigen::VectorXd X = rng.vector(4, -1.0, 1.0), Y = rng.vector(4, -1.0, 1.0),
                    Z = rng.vector(4, -1.0, 1.0), W = rng.vector(4, -1.0, 1.0);
    auto S = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                 const Eigen::VectorXd& d) { return d.dot(g * (R.apply(a, b) * c)); };
    CHECK(S(X, Y, Z, W) == doctest::Approx(-S(Y, X, Z, W)).epsilon(1e-10));
    CHECK(S(X, Y, Z, W) == doctest::Approx(-S(X, Y, W, Z)).epsilon(1e-10));
    CHECK(S(X, Y, Z, W) == doctest::Approx(S(Z, W, X, Y)).epsilon(1e-10));
    Eigen::VectorXd bianchi =
        R.apply(X, Y) * Z + R.apply(Y, Z) * X + R.apply(Z, X) * Y;
    CHECK(bianchi.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("second covariant derivative commutator equals curvature action") {
  MetricField m = fstest::bumpy3();
  for (const ChartPoint& p : sample_points(m.chart, 5, 77)) {
    MetricJets mj = metric_jets_at(m, p);
    JetMat T = smooth_tensor_field(mj.x);
    Eigen::MatrixXd Tv = values_of(T);
    Nabla2 n2 = second_covariant_derivative_11(mj.gamma, T);
    Riemann4 R = riemann_from_connection(connection_matrices(mj.gamma));
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        Eigen::MatrixXd lhs = n2.at(k, l) - n2.at(l, k);
        Eigen::MatrixXd rop = R.op(k, l);
        Eigen::MatrixXd rhs = rop * Tv - Tv * rop;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
      }
  }
}

TEST_CASE("covariant derivative of the identity tensor vanishes") {
  MetricField m = fstest::bumpy3();
  ChartPoint p{"bumpy3", fstest::vec3(0.3, -0.4, 0.1)};
  MetricJets mj = metric_jets_at(m, p);
  auto dI = covariant_derivative_11(mj.gamma, jet_identity(3));
  for (const auto& s : dI) CHECK(values_of(s).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("covariant derivative of a vector field matches index assembly") {
  MetricField m = fstest::bumpy3();
  auto fn = fstest::value_fn(m);
  Rng rng(7);
  for (const ChartPoint& p : sample_points(m.chart, 4, 78)) {
    MetricJets mj = metric_jets_at(m, p);
    JetVec W(3);
    for (int i = 0; i < 3; ++i) W[i] = cos(mj.x[(2 * i + 1) % 3]) + 0.1 * mj.x[i] * mj.x[(i + 1) % 3];
    Eigen::VectorXd X = rng.vector(3, -1.0, 1.0);
    Eigen::VectorXd got = covariant_derivative_vec(mj.gamma, W, X);
    auto gamma_fd = fstest::christoffels_fd(fn, p.x);
    Eigen::VectorXd want = Eigen::VectorXd::Zero(3);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i) {
        double s = W[i].d1(k);
        for (int mm = 0; mm < 3; ++mm) s += gamma_fd[i](k, mm) * W[mm].value();
        want[i] += X[k] * s;
      }
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("frames orthonormalize vertical-first and fix orientation") {
  // Euclidean 4-space, one vertical direction.
  Eigen::MatrixXd g4 = Eigen::MatrixXd::Identity(4, 4);
  Eigen::MatrixXd vert = Eigen::MatrixXd::Zero(4, 1);
  vert(2, 0) = 1.0;
  FrameValue f = orthonormal_frame_at(g4, vert);
  CHECK((f.F.col(0) - Eigen::VectorXd::Unit(4, 2)).norm() == 0.0);
  CHECK((f.F.col(1) - Eigen::VectorXd::Unit(4, 0)).norm() == 0.0);
  CHECK((f.F.col(2) - Eigen::VectorXd::Unit(4, 1)).norm() == 0.0);
  CHECK((f.F.col(3) - Eigen::VectorXd::Unit(4, 3)).norm() == 0.0);
  CHECK(f.F.determinant() > 0.0);
  CHECK(f.signs.minCoeff() == 1.0);

  // Orientation flip: starting from e1 in the plane forces negating the last column.
  Eigen::MatrixXd g2 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd vert2 = Eigen::MatrixXd::Zero(2, 1);
  vert2(1, 0) = 1.0;
  FrameValue f2 = orthonormal_frame_at(g2, vert2);
  CHECK((f2.F.col(1) + Eigen::VectorXd::Unit(2, 0)).norm() == 0.0);
  CHECK(f2.F.determinant() > 0.0);

  // Scaled metric normalizes lengths.
  Eigen::MatrixXd gs = Eigen::Vector2d(1.0, 0.75).asDiagonal();
  FrameValue fs = orthonormal_frame_at(gs, Eigen::MatrixXd(2, 0));
  CHECK(fs.F(0, 0) == doctest::Approx(1.0));
  CHECK(fs.F(1, 1) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-14));
}

TEST_CASE("frames carry signature signs and reject null directions") {
  Eigen::MatrixXd g = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  Eigen::MatrixXd vert = Eigen::MatrixXd::Zero(3, 1);
  vert(0, 0) = 1.0;
  FrameValue f = orthonormal_frame_at(g, vert);
  CHECK(f.signs(0) == -1.0);
  CHECK(f.signs(1) == 1.0);
  CHECK(f.signs(2) == 1.0);

  Eigen::MatrixXd null_dir = Eigen::MatrixXd::Zero(3, 1);
  null_dir(0, 0) = 1.0;
  null_dir(1, 0) = 1.0;  // lightlike in this signature
  CHECK_THROWS_AS(orthonormal_frame_at(g, null_dir), DegenerateRestrictionError);
}

TEST_CASE("frame construction is bit-deterministic") {
  MetricField m = fstest::warped_s2xs2();
  ChartPoint p{"s2xs2w", fstest::vec4(1.1, 2.0, 0.7, 3.0)};
  Eigen::MatrixXd g = values_of(metric_at(m, p, 0));
  Eigen::MatrixXd vert(4, 2);
  vert.setZero();
  vert(0, 0) = 1.0;
  vert(1, 1) = 0.5;
  FrameValue a = orthonormal_frame_at(g, vert);
  FrameValue b = orthonormal_frame_at(g, vert);
  CHECK(a.F == b.F);
  CHECK(a.signs == b.signs);
}

TEST_CASE("frame norms measure components in the frame") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
  FrameValue f = orthonormal_frame_at(g, Eigen::MatrixXd(2, 0));
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 2.0, 0.0, 0.0;
  CHECK(frame_operator_norm(f, A) == doctest::Approx(2.0));
  Eigen::VectorXd v(2);
  v << 3.0, 4.0;
  CHECK(frame_vector_norm(f, v) == doctest::Approx(5.0));

  // Anisotropic metric g = diag(1,4): completion pivots on the largest
  // |g(w,w)|, so e1 (length 2) leads and the orientation fix negates e0.
  Eigen::MatrixXd g2 = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  FrameValue f2 = orthonormal_frame_at(g2, Eigen::MatrixXd(2, 0));
  CHECK(f2.F(1, 0) == doctest::Approx(0.5));
  CHECK(f2.F(0, 1) == doctest::Approx(-1.0));
  CHECK(frame_operator_norm(f2, A) == doctest::Approx(1.0));
}

TEST_CASE("chart sampling respects margins and seeds") {
  Chart c = fstest::round_s2().chart;
  auto pts = sample_points(c, 50, 42);
  CHECK(pts.size() == 50);
  const double m0 = std::max(1e-2, 0.05 * M_PI);
  const double m1 = std::max(1e-2, 0.05 * 2.0 * M_PI);
  for (const auto& p : pts) {
    CHECK(p.x[0] >= c.lo[0] + m0);
    CHECK(p.x[0] <= c.hi[0] - m0);
    CHECK(p.x[1] >= c.lo[1] + m1);
    CHECK(p.x[1] <= c.hi[1] - m1);
  }
  auto again = sample_points(c, 50, 42);
  for (size_t i = 0; i < pts.size(); ++i) CHECK(pts[i].x == again[i].x);
  auto other = sample_points(c, 50, 43);
  CHECK(pts[0].x != other[0].x);
}

TEST_CASE("metric evaluation rejects bad points and singular metrics") {
  MetricField s2 = fstest::round_s2();
  CHECK_THROWS_AS(metric_at(s2, ChartPoint{"s2", fstest::vec2(-0.1, 1.0)}), DomainError);
  CHECK_THROWS_AS(metric_at(s2, ChartPoint{"other", fstest::vec2(1.0, 1.0)}), DomainError);

  MetricField sick;
  sick.chart = Chart{"sick", Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
  sick.signature = Eigen::VectorXi::Constant(2, 1);
  sick.eval = [](const JetVec& x) {
    JetMat g(2, 2);
    g(0, 0) = x[0];  // vanishes inside the chart
    g(1, 1) = Jet3(1.0);
    return g;
  };
  CHECK_THROWS_AS(metric_jets_at(sick, ChartPoint{"sick", fstest::vec2(1e-13, 0.0)}),
                  SingularMetricError);
}
