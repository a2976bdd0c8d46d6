#include "fibershrink/forms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/LU>

#include "fibershrink/errors.hpp"
#include "fibershrink/jet.hpp"

namespace fibershrink {
namespace {

constexpr int kMaxFormDim = 12;  // dense storage is 1 << dim coefficients

std::uint32_t tuple_to_mask(int dim, const std::vector<int>& indices) {
  std::uint32_t mask = 0;
  int prev = -1;
  for (int i : indices) {
    if (i <= prev || i >= dim)
      throw FormAlgebraError("form index tuple must be strictly increasing and within dimension");
    mask |= 1u << i;
    prev = i;
  }
  return mask;
}

std::vector<int> mask_to_tuple(std::uint32_t mask) {
  std::vector<int> out;
  for (int i = 0; mask >> i; ++i)
    if (mask & (1u << i)) out.push_back(i);
  return out;
}

/// Parity of moving every index of `b` past the larger indices of `a` when
/// concatenating two increasing tuples: +1/-1.
double merge_sign(std::uint32_t a, std::uint32_t b) {
  int crossings = 0;
  for (int j = 0; b >> j; ++j)
    if (b & (1u << j)) crossings += std::popcount(a >> (j + 1));
  return (crossings % 2 == 0) ? 1.0 : -1.0;
}

void require_same_shape(const ExteriorForm& a, const ExteriorForm& b) {
  if (a.dim() != b.dim() || a.degree() != b.degree())
    throw FormAlgebraError("form operands must share dimension and degree");
}

}  // namespace

ExteriorForm::ExteriorForm(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 0 || dim > kMaxFormDim) throw FormAlgebraError("form dimension out of range");
  if (degree < 0) throw FormAlgebraError("form degree must be nonnegative");
  c_.assign(std::size_t{1} << dim, 0.0);
}

ExteriorForm ExteriorForm::constant(int dim, double value) {
  ExteriorForm f(dim, 0);
  f.c_[0] = value;
  return f;
}

ExteriorForm ExteriorForm::coordinate(int dim, const std::vector<int>& indices) {
  ExteriorForm f(dim, static_cast<int>(indices.size()));
  f.c_[tuple_to_mask(dim, indices)] = 1.0;
  return f;
}

double ExteriorForm::coeff(const std::vector<int>& indices) const {
  if (static_cast<int>(indices.size()) != degree_) return 0.0;
  return c_[tuple_to_mask(dim_, indices)];
}

void ExteriorForm::set_coeff(const std::vector<int>& indices, double value) {
  if (static_cast<int>(indices.size()) != degree_)
    throw FormAlgebraError("coefficient tuple length must equal the form degree");
  c_[tuple_to_mask(dim_, indices)] = value;
}

double ExteriorForm::max_abs_coeff() const {
  double worst = 0.0;
  for (double v : c_) worst = std::max(worst, std::abs(v));
  return worst;
}

double ExteriorForm::evaluate(const std::vector<Eigen::VectorXd>& args) const {
  if (static_cast<int>(args.size()) != degree_)
    throw FormAlgebraError("argument count must equal the form degree");
  for (const Eigen::VectorXd& a : args)
    if (static_cast<int>(a.size()) != dim_)
      throw FormAlgebraError("argument dimension must equal the form dimension");
  if (degree_ == 0) return c_[0];
  double total = 0.0;
  Eigen::MatrixXd minor(degree_, degree_);
  for (std::uint32_t mask = 0; mask < c_.size(); ++mask) {
    if (c_[mask] == 0.0 || std::popcount(mask) != degree_) continue;
    int r = 0;
    for (int i = 0; mask >> i; ++i) {
      if (!(mask & (1u << i))) continue;
      for (int c = 0; c < degree_; ++c) minor(r, c) = args[static_cast<size_t>(c)][i];
      ++r;
    }
    total += c_[mask] * minor.determinant();
  }
  return total;
}

std::vector<std::pair<std::vector<int>, double>> ExteriorForm::entries() const {
  std::vector<std::pair<std::vector<int>, double>> out;
  for (std::uint32_t mask = 0; mask < c_.size(); ++mask)
    if (c_[mask] != 0.0 && std::popcount(mask) == degree_)
      out.emplace_back(mask_to_tuple(mask), c_[mask]);
  std::sort(out.begin(), out.end());
  return out;
}

ExteriorForm& ExteriorForm::operator+=(const ExteriorForm& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

ExteriorForm& ExteriorForm::operator-=(const ExteriorForm& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

ExteriorForm& ExteriorForm::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

ExteriorForm wedge(const ExteriorForm& a, const ExteriorForm& b) {
  if (a.dim() != b.dim()) throw FormAlgebraError("wedge operands must share dimension");
  ExteriorForm out(a.dim(), a.degree() + b.degree());
  if (a.degree() + b.degree() > a.dim()) return out;  // structurally zero
  const std::uint32_t size = 1u << a.dim();
  for (std::uint32_t ma = 0; ma < size; ++ma) {
    if (std::popcount(ma) != a.degree()) continue;
    const double ca = a.coeff_mask(ma);
    if (ca == 0.0) continue;
    for (std::uint32_t mb = 0; mb < size; ++mb) {
      if (std::popcount(mb) != b.degree() || (ma & mb)) continue;
      const double cb = b.coeff_mask(mb);
      if (cb == 0.0) continue;
      out.add_mask(ma | mb, merge_sign(ma, mb) * ca * cb);
    }
  }
  return out;
}

std::string to_json_string(const ExteriorForm& f) {
  std::string out = "{\"degree\":" + std::to_string(f.degree()) + ",\"entries\":[";
  bool first = true;
  char buf[48];
  for (const auto& [tuple, value] : f.entries()) {
    if (!first) out += ',';
    first = false;
    out += "[[";
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(tuple[i]);
    }
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out += "],";
    out += buf;
    out += ']';
  }
  out += "]}";
  return out;
}

FormMatrix::FormMatrix(int rows, int cols, int dim, int degree)
    : rows_(rows), cols_(cols), dim_(dim), degree_(degree) {
  if (rows < 0 || cols < 0) throw FormAlgebraError("form matrix shape must be nonnegative");
  e_.assign(static_cast<std::size_t>(rows) * cols, ExteriorForm(dim, degree));
}

FormMatrix FormMatrix::block(int row0, int col0, int nrows, int ncols) const {
  if (row0 < 0 || col0 < 0 || row0 + nrows > rows_ || col0 + ncols > cols_)
    throw FormAlgebraError("form matrix block out of range");
  FormMatrix out(nrows, ncols, dim_, degree_);
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < ncols; ++j) out.at(i, j) = at(row0 + i, col0 + j);
  return out;
}

double FormMatrix::max_abs_coeff() const {
  double worst = 0.0;
  for (const ExteriorForm& f : e_) worst = std::max(worst, f.max_abs_coeff());
  return worst;
}

FormMatrix vertical_block(const CurvatureFormMatrix& c) {
  return c.omega.block(0, 0, c.vdim, c.vdim);
}

FormMatrix horizontal_block(const CurvatureFormMatrix& c) {
  const int hd = c.n() - c.vdim;
  return c.omega.block(c.vdim, c.vdim, hd, hd);
}

FormMatrix mixed_block(const CurvatureFormMatrix& c) {
  return c.omega.block(0, c.vdim, c.vdim, c.n() - c.vdim);
}

namespace {

/// omega(i, j) = signs[i] <R(d_k, d_l) e_j, e_i> dx^k ^ dx^l over k < l.
FormMatrix curvature_entries(const Riemann4& R, const Eigen::MatrixXd& gv,
                             const FrameValue& frame) {
  const int n = R.dim();
  const int nf = static_cast<int>(frame.F.cols());
  FormMatrix out(nf, nf, n, 2);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      // pair(i, j) = <R(d_k, d_l) e_j, e_i>
      const Eigen::MatrixXd pair = frame.F.transpose() * gv * R.op(k, l) * frame.F;
      const std::uint32_t mask = (1u << k) | (1u << l);
      for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nf; ++j) out.at(i, j).add_mask(mask, frame.signs[i] * pair(i, j));
    }
  return out;
}

}  // namespace

CurvatureFormMatrix curvature_form_at(const MetricField& m, const ChartPoint& p) {
  CurvatureFormMatrix out;
  const Eigen::MatrixXd gv = values_of(metric_at(m, p, 1));
  out.frame = orthonormal_frame_at(gv, Eigen::MatrixXd(gv.rows(), 0));
  out.vdim = 0;
  out.omega = curvature_entries(riemann_at(m, p), gv, out.frame);
  return out;
}

CurvatureFormMatrix curvature_form_at(const SubmersionSpec& s, const ChartPoint& p) {
  SubmersionJets sj = submersion_jets_at(s, p);
  CurvatureFormMatrix out;
  out.frame = sj.frame;
  out.vdim = sj.vdim;
  out.omega = curvature_entries(sj.R, sj.gv, out.frame);
  return out;
}

CurvatureFormMatrix curvature_form_at(const VariedMetric& vm, const ChartPoint& p) {
  SubmersionJets sj = submersion_jets_at(vm.base, p);
  CurvatureFormMatrix out;
  out.frame = sj.frame;
  out.vdim = sj.vdim;
  out.eps = vm.eps.eps;
  out.frame.F.leftCols(sj.vdim) /= vm.eps.shrink();
  const Eigen::MatrixXd ge = values_of(g_eps_at(vm, p, 1));
  out.omega = curvature_entries(riemann_at(vm.metric, p), ge, out.frame);
  return out;
}

FormMatrix fiber_curvature_form_at(const SubmersionSpec& s, const ChartPoint& p) {
  SubmersionJets sj = submersion_jets_at(s, p);
  const int n = sj.Rsplit.dim();
  FormMatrix out(sj.vdim, sj.vdim, n, 2);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      const Eigen::MatrixXd gR = sj.gv * sj.Rsplit.op(k, l);
      const std::uint32_t mask = (1u << k) | (1u << l);
      for (int i = 0; i < sj.vdim; ++i)
        for (int j = 0; j < sj.vdim; ++j)
          out.at(i, j).add_mask(
              mask, sj.frame.signs[i] * sj.frame.F.col(i).dot(gR * sj.frame.F.col(j)));
    }
  return out;
}

namespace {

ExteriorForm pfaffian_recursive(const FormMatrix& a, const std::vector<int>& active) {
  if (active.empty()) return ExteriorForm::constant(a.dim(), 1.0);
  if (active.size() == 2) return a.at(active[0], active[1]);
  ExteriorForm total(a.dim(), a.degree() * static_cast<int>(active.size()) / 2);
  const int i0 = active[0];
  for (std::size_t t = 1; t < active.size(); ++t) {
    const int it = active[static_cast<int>(t)];
    std::vector<int> rest;
    rest.reserve(active.size() - 2);
    for (std::size_t r = 1; r < active.size(); ++r)
      if (r != t) rest.push_back(active[r]);
    ExteriorForm term = wedge(a.at(i0, it), pfaffian_recursive(a, rest));
    total += (t % 2 == 1 ? 1.0 : -1.0) * term;
  }
  return total;
}

double pfaffian_recursive_scalar(const Eigen::MatrixXd& a, const std::vector<int>& active) {
  if (active.empty()) return 1.0;
  if (active.size() == 2) return a(active[0], active[1]);
  double total = 0.0;
  const int i0 = active[0];
  for (std::size_t t = 1; t < active.size(); ++t) {
    const int it = active[static_cast<int>(t)];
    std::vector<int> rest;
    rest.reserve(active.size() - 2);
    for (std::size_t r = 1; r < active.size(); ++r)
      if (r != t) rest.push_back(active[r]);
    total += (t % 2 == 1 ? 1.0 : -1.0) * a(i0, it) * pfaffian_recursive_scalar(a, rest);
  }
  return total;
}

}  // namespace

ExteriorForm pfaffian(const FormMatrix& a) {
  if (a.rows() != a.cols()) throw FormAlgebraError("pfaffian requires a square matrix");
  if (a.rows() % 2 != 0) throw FormParityError("pfaffian requires an even-sized matrix");
  if (a.degree() % 2 != 0)
    throw FormAlgebraError("pfaffian requires commuting (even-degree) entries");
  std::vector<int> active(static_cast<std::size_t>(a.rows()));
  std::iota(active.begin(), active.end(), 0);
  return pfaffian_recursive(a, active);
}

double pfaffian(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw FormAlgebraError("pfaffian requires a square matrix");
  if (a.rows() % 2 != 0) throw FormParityError("pfaffian requires an even-sized matrix");
  std::vector<int> active(static_cast<std::size_t>(a.rows()));
  std::iota(active.begin(), active.end(), 0);
  return pfaffian_recursive_scalar(a, active);
}

double pfaffian_permutation_sum(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw FormAlgebraError("pfaffian requires a square matrix");
  const int n = static_cast<int>(a.rows());
  if (n % 2 != 0) throw FormParityError("pfaffian requires an even-sized matrix");
  const int m = n / 2;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[static_cast<size_t>(i)] > perm[static_cast<size_t>(j)]) ++inversions;
    double prod = (inversions % 2 == 0) ? 1.0 : -1.0;
    for (int i = 0; i < m; ++i)
      prod *= a(perm[static_cast<size_t>(2 * i)], perm[static_cast<size_t>(2 * i + 1)]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  double norm = 1.0;
  for (int i = 1; i <= m; ++i) norm *= 2.0 * i;  // 2^m m!
  return total / norm;
}

ExteriorForm euler_form(const CurvatureFormMatrix& c) {
  const int n = c.n();
  if (n % 2 != 0) throw FormParityError("euler form requires an even-dimensional frame");
  for (int i = 0; i < n; ++i)
    if (c.frame.signs[i] <= 0.0)
      throw UnsupportedSignatureError("euler form requires Riemannian signature");
  return std::pow(2.0 * M_PI, -n / 2.0) * pfaffian(c.omega);
}

ExteriorForm euler_form_at(const MetricField& m, const ChartPoint& p) {
  return euler_form(curvature_form_at(m, p));
}

ExteriorForm euler_form_at(const VariedMetric& vm, const ChartPoint& p) {
  return euler_form(curvature_form_at(vm, p));
}

ExteriorForm pullback(const ExteriorForm& alpha, const ProjectionMap& pi, const ChartPoint& p) {
  if (alpha.dim() != pi.base_dim)
    throw FormAlgebraError("pullback source form must live on the base dimension");
  const JetVec ys = pi.eval(seed_coords(p.x, 1));
  Eigen::MatrixXd dpi(pi.base_dim, pi.domain_dim);
  for (int a = 0; a < pi.base_dim; ++a)
    for (int k = 0; k < pi.domain_dim; ++k) dpi(a, k) = ys(a).d1(k);

  ExteriorForm out(pi.domain_dim, alpha.degree());
  if (alpha.degree() == 0) {
    out = ExteriorForm::constant(pi.domain_dim, alpha.coeff_mask(0));
    return out;
  }
  std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(alpha.degree()));
  const std::uint32_t size = 1u << pi.domain_dim;
  for (std::uint32_t mask = 0; mask < size; ++mask) {
    if (std::popcount(mask) != alpha.degree()) continue;
    int c = 0;
    for (int i = 0; mask >> i; ++i)
      if (mask & (1u << i)) args[static_cast<std::size_t>(c++)] = dpi.col(i);
    out.add_mask(mask, alpha.evaluate(args));
  }
  return out;
}

FormMatrix pullback(const FormMatrix& a, const ProjectionMap& pi, const ChartPoint& p) {
  FormMatrix out(a.rows(), a.cols(), pi.domain_dim, a.degree());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(i, j) = pullback(a.at(i, j), pi, p);
  return out;
}

}  // namespace fibershrink
