#include "ttpinv/tt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ttpinv/kernels.hpp"
#include "ttpinv/lapack.hpp"

namespace ttpinv {

namespace {

void check_site(std::size_t n, std::size_t order, const char* who) {
  if (n >= order)
    throw std::invalid_argument(std::string(who) + ": site " + std::to_string(n) +
                                " out of range for order " + std::to_string(order));
}

bool all_finite(const DenseTensor& t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

// Left-orthogonalize core n of a 3rd-order train in place, pushing the
// triangular factor into core n+1.
void push_left(std::vector<DenseTensor>& cores, std::vector<Ortho>& flags,
               std::size_t n) {
  const DenseTensor& c = cores[n];
  const std::size_t a = c.dim(0), k = c.dim(1), b = c.dim(2);
  DenseTensor q, r;
  la::qr(c.reshaped({a * k, b}), q, r);
  const std::size_t rnew = q.cols();
  cores[n] = std::move(q).reshaped({a, k, rnew});
  flags[n] = Ortho::left;
  cores[n + 1] = mode1_contract(r, cores[n + 1]);
  flags[n + 1] = Ortho::none;
}

// Right-orthogonalize core n, pushing the factor into core n-1.
void push_right(std::vector<DenseTensor>& cores, std::vector<Ortho>& flags,
                std::size_t n) {
  const DenseTensor& c = cores[n];
  const std::size_t a = c.dim(0), k = c.dim(1), b = c.dim(2);
  DenseTensor l, q;
  la::lq(c.reshaped({a, k * b}), l, q);
  const std::size_t rnew = q.rows();
  cores[n] = std::move(q).reshaped({rnew, k, b});
  flags[n] = Ortho::right;
  cores[n - 1] = mode1_contract(cores[n - 1], l);
  flags[n - 1] = Ortho::none;
}

void orthogonalize_in_place(std::vector<DenseTensor>& cores,
                            std::vector<Ortho>& flags, std::size_t pivot) {
  const std::size_t n_sites = cores.size();
  if (n_sites < 2 || pivot > n_sites - 2)
    throw std::invalid_argument("orthogonalize: pivot " + std::to_string(pivot) +
                                " out of range for order " +
                                std::to_string(n_sites));
  for (std::size_t n = 0; n < pivot; ++n)
    if (flags[n] != Ortho::left) push_left(cores, flags, n);
  for (std::size_t n = n_sites - 1; n >= pivot + 2; --n) {
    if (flags[n] != Ortho::right) push_right(cores, flags, n);
    if (n == pivot + 2) break;  // n is unsigned
  }
}

}  // namespace

// --- TTVector ----------------------------------------------------------------

TTVector::TTVector(std::vector<DenseTensor> cores)
    : cores_(std::move(cores)), flags_(cores_.size(), Ortho::none) {
  validate();
}

TTVector::TTVector(std::vector<DenseTensor> cores, std::vector<Ortho> flags)
    : cores_(std::move(cores)), flags_(std::move(flags)) {
  if (flags_.size() != cores_.size())
    throw std::invalid_argument("TTVector: flag count does not match order");
  validate();
}

void TTVector::validate() const {
  if (cores_.empty()) throw std::invalid_argument("TTVector: empty train");
  for (std::size_t n = 0; n < cores_.size(); ++n) {
    if (cores_[n].order() != 3)
      throw std::invalid_argument("TTVector: core " + std::to_string(n) +
                                  " has shape " + cores_[n].shape_str() +
                                  ", expected order 3");
    if (n + 1 < cores_.size() && cores_[n].dim(2) != cores_[n + 1].dim(0))
      throw std::invalid_argument(
          "TTVector: rank chain broken between cores " + std::to_string(n) +
          " " + cores_[n].shape_str() + " and " + std::to_string(n + 1) + " " +
          cores_[n + 1].shape_str());
  }
  if (cores_.front().dim(0) != 1 || cores_.back().dim(2) != 1)
    throw std::invalid_argument("TTVector: boundary ranks must be 1");
}

TTVector TTVector::ones(std::span<const std::size_t> mode_sizes) {
  std::vector<DenseTensor> cores;
  cores.reserve(mode_sizes.size());
  for (std::size_t k : mode_sizes) {
    DenseTensor c({1, k, 1});
    std::fill(c.values().begin(), c.values().end(), 1.0);
    cores.push_back(std::move(c));
  }
  return TTVector(std::move(cores));
}

TTVector TTVector::zeros(std::span<const std::size_t> mode_sizes) {
  std::vector<DenseTensor> cores;
  cores.reserve(mode_sizes.size());
  for (std::size_t k : mode_sizes) cores.emplace_back(std::vector<std::size_t>{1, k, 1});
  return TTVector(std::move(cores));
}

std::vector<std::size_t> TTVector::mode_sizes() const {
  std::vector<std::size_t> m(order());
  for (std::size_t n = 0; n < order(); ++n) m[n] = mode_size(n);
  return m;
}

std::size_t TTVector::rank(std::size_t bond) const {
  return bond == 0 ? cores_.front().dim(0) : cores_[bond - 1].dim(2);
}

std::vector<std::size_t> TTVector::ranks() const {
  std::vector<std::size_t> r(order() + 1);
  for (std::size_t b = 0; b <= order(); ++b) r[b] = rank(b);
  return r;
}

std::size_t TTVector::max_rank() const {
  std::size_t m = 1;
  for (std::size_t b = 0; b <= order(); ++b) m = std::max(m, rank(b));
  return m;
}

double TTVector::log2_length() const {
  double s = 0.0;
  for (std::size_t n = 0; n < order(); ++n)
    s += std::log2(static_cast<double>(mode_size(n)));
  return s;
}

bool TTVector::dense_fits(std::size_t guard) const {
  return log2_length() <= std::log2(static_cast<double>(guard)) + 1e-9;
}

void TTVector::set_core(std::size_t n, DenseTensor core, Ortho flag) {
  check_site(n, order(), "TTVector::set_core");
  cores_[n] = std::move(core);
  flags_[n] = flag;
  validate();
}

void TTVector::set_pair(std::size_t n, DenseTensor left, DenseTensor right,
                        Ortho left_flag, Ortho right_flag) {
  check_site(n + 1, order(), "TTVector::set_pair");
  cores_[n] = std::move(left);
  cores_[n + 1] = std::move(right);
  flags_[n] = left_flag;
  flags_[n + 1] = right_flag;
  validate();
}

// --- TTMatrix ----------------------------------------------------------------

TTMatrix::TTMatrix(std::vector<DenseTensor> cores)
    : cores_(std::move(cores)), flags_(cores_.size(), Ortho::none) {
  validate();
}

TTMatrix::TTMatrix(std::vector<DenseTensor> cores, std::vector<Ortho> flags)
    : cores_(std::move(cores)), flags_(std::move(flags)) {
  if (flags_.size() != cores_.size())
    throw std::invalid_argument("TTMatrix: flag count does not match order");
  validate();
}

void TTMatrix::validate() const {
  if (cores_.empty()) throw std::invalid_argument("TTMatrix: empty train");
  for (std::size_t n = 0; n < cores_.size(); ++n) {
    if (cores_[n].order() != 4)
      throw std::invalid_argument("TTMatrix: core " + std::to_string(n) +
                                  " has shape " + cores_[n].shape_str() +
                                  ", expected order 4");
    if (n + 1 < cores_.size() && cores_[n].dim(3) != cores_[n + 1].dim(0))
      throw std::invalid_argument(
          "TTMatrix: rank chain broken between cores " + std::to_string(n) +
          " " + cores_[n].shape_str() + " and " + std::to_string(n + 1) + " " +
          cores_[n + 1].shape_str());
  }
  if (cores_.front().dim(0) != 1 || cores_.back().dim(3) != 1)
    throw std::invalid_argument("TTMatrix: boundary ranks must be 1");
}

TTMatrix TTMatrix::identity(std::span<const std::size_t> mode_sizes) {
  std::vector<DenseTensor> cores;
  cores.reserve(mode_sizes.size());
  for (std::size_t k : mode_sizes) {
    DenseTensor c({1, k, k, 1});
    for (std::size_t i = 0; i < k; ++i) c(0, i, i, 0) = 1.0;
    cores.push_back(std::move(c));
  }
  return TTMatrix(std::move(cores));
}

std::vector<std::size_t> TTMatrix::row_sizes() const {
  std::vector<std::size_t> m(order());
  for (std::size_t n = 0; n < order(); ++n) m[n] = row_size(n);
  return m;
}

std::vector<std::size_t> TTMatrix::col_sizes() const {
  std::vector<std::size_t> m(order());
  for (std::size_t n = 0; n < order(); ++n) m[n] = col_size(n);
  return m;
}

std::size_t TTMatrix::rank(std::size_t bond) const {
  return bond == 0 ? cores_.front().dim(0) : cores_[bond - 1].dim(3);
}

std::vector<std::size_t> TTMatrix::ranks() const {
  std::vector<std::size_t> r(order() + 1);
  for (std::size_t b = 0; b <= order(); ++b) r[b] = rank(b);
  return r;
}

std::size_t TTMatrix::max_rank() const {
  std::size_t m = 1;
  for (std::size_t b = 0; b <= order(); ++b) m = std::max(m, rank(b));
  return m;
}

double TTMatrix::log2_rows() const {
  double s = 0.0;
  for (std::size_t n = 0; n < order(); ++n)
    s += std::log2(static_cast<double>(row_size(n)));
  return s;
}

double TTMatrix::log2_cols() const {
  double s = 0.0;
  for (std::size_t n = 0; n < order(); ++n)
    s += std::log2(static_cast<double>(col_size(n)));
  return s;
}

bool TTMatrix::dense_fits(std::size_t guard) const {
  return log2_rows() + log2_cols() <= std::log2(static_cast<double>(guard)) + 1e-9;
}

void TTMatrix::set_core(std::size_t n, DenseTensor core, Ortho flag) {
  check_site(n, order(), "TTMatrix::set_core");
  cores_[n] = std::move(core);
  flags_[n] = flag;
  validate();
}

void TTMatrix::set_pair(std::size_t n, DenseTensor left, DenseTensor right,
                        Ortho left_flag, Ortho right_flag) {
  check_site(n + 1, order(), "TTMatrix::set_pair");
  cores_[n] = std::move(left);
  cores_[n + 1] = std::move(right);
  flags_[n] = left_flag;
  flags_[n + 1] = right_flag;
  validate();
}

// --- conversions -------------------------------------------------------------

DenseTensor tt_to_dense(const TTVector& t) {
  if (!t.dense_fits())
    throw std::invalid_argument("tt_to_dense: reconstruction exceeds the " +
                                std::to_string(kDenseGuard) + "-entry guard");
  DenseTensor cur = t.core(0);
  for (std::size_t n = 1; n < t.order(); ++n)
    cur = mode1_contract(cur, t.core(n));
  return std::move(cur).reshaped(t.mode_sizes());
}

DenseTensor tt_to_dense(const TTMatrix& a) {
  if (!a.dense_fits())
    throw std::invalid_argument("tt_to_dense: reconstruction exceeds the " +
                                std::to_string(kDenseGuard) + "-entry guard");
  DenseTensor cur = a.core(0);
  for (std::size_t n = 1; n < a.order(); ++n)
    cur = mode1_contract(cur, a.core(n));
  // (1, I_1, J_1, ..., I_N, J_N, 1) -> rows together, then columns.
  const std::size_t n_sites = a.order();
  std::vector<std::size_t> interleaved;
  for (std::size_t n = 0; n < n_sites; ++n) {
    interleaved.push_back(a.row_size(n));
    interleaved.push_back(a.col_size(n));
  }
  cur = std::move(cur).reshaped(interleaved);
  std::vector<std::size_t> perm;
  for (std::size_t n = 0; n < n_sites; ++n) perm.push_back(2 * n);
  for (std::size_t n = 0; n < n_sites; ++n) perm.push_back(2 * n + 1);
  cur = permute(cur, perm);
  std::size_t rows = 1, cols = 1;
  for (std::size_t n = 0; n < n_sites; ++n) {
    rows *= a.row_size(n);
    cols *= a.col_size(n);
  }
  return std::move(cur).reshaped({rows, cols});
}

TTVector tt_from_dense(const DenseTensor& x, double delta,
                       std::span<const std::size_t> rank_caps) {
  if (delta < 0.0) throw std::invalid_argument("tt_from_dense: delta < 0");
  const std::size_t n_sites = x.order() == 0 ? 1 : x.order();
  const std::vector<std::size_t> modes =
      x.order() == 0 ? std::vector<std::size_t>{1} : x.shape();
  if (!rank_caps.empty() && rank_caps.size() != n_sites - 1)
    throw std::invalid_argument("tt_from_dense: expected " +
                                std::to_string(n_sites - 1) + " rank caps");
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  std::vector<Ortho> flags(n_sites, Ortho::none);

  DenseTensor rest = x.reshaped({x.size(), std::size_t{1}});
  std::size_t r_prev = 1;
  std::size_t tail_size = x.size();
  for (std::size_t n = 0; n + 1 < n_sites; ++n) {
    const std::size_t k = modes[n];
    tail_size /= k;
    DenseTensor m = std::move(rest).reshaped({r_prev * k, tail_size});
    auto svd = la::svd_econ(m);
    const std::size_t cap = rank_caps.empty() ? 0 : rank_caps[n];
    const auto trunc = la::truncation_rank(svd.sigma, delta, cap);
    const std::size_t r = trunc.rank;

    DenseTensor u({r_prev * k, r});
    std::copy(svd.u.data(), svd.u.data() + u.size(), u.data());
    cores.push_back(std::move(u).reshaped({r_prev, k, r}));
    flags[n] = Ortho::left;

    // rest = diag(sigma) * vt(0:r, :)
    DenseTensor sv({r, tail_size});
    const std::size_t kfull = svd.sigma.size();
    for (std::size_t j = 0; j < tail_size; ++j)
      for (std::size_t i = 0; i < r; ++i)
        sv(i, j) = svd.sigma[i] * svd.vt[i + j * kfull];
    rest = std::move(sv);
    r_prev = r;
  }
  cores.push_back(std::move(rest).reshaped({r_prev, modes.back(), std::size_t{1}}));
  return TTVector(std::move(cores), std::move(flags));
}

TTMatrix tt_matrix_from_dense(const DenseTensor& a,
                              std::span<const std::size_t> row_sizes,
                              std::span<const std::size_t> col_sizes,
                              double delta,
                              std::span<const std::size_t> rank_caps) {
  if (a.order() != 2)
    throw std::invalid_argument("tt_matrix_from_dense: expected a matrix");
  if (row_sizes.size() != col_sizes.size() || row_sizes.empty())
    throw std::invalid_argument("tt_matrix_from_dense: bad site factorizations");
  const std::size_t n_sites = row_sizes.size();
  std::size_t rows = 1, cols = 1;
  for (std::size_t n = 0; n < n_sites; ++n) {
    rows *= row_sizes[n];
    cols *= col_sizes[n];
  }
  if (rows != a.rows() || cols != a.cols())
    throw std::invalid_argument(
        "tt_matrix_from_dense: factorizations do not multiply to " +
        a.shape_str());

  // (i_1..i_N, j_1..j_N) -> per-site interleaving (i_1, j_1, i_2, j_2, ...).
  std::vector<std::size_t> split_shape;
  for (std::size_t n = 0; n < n_sites; ++n) split_shape.push_back(row_sizes[n]);
  for (std::size_t n = 0; n < n_sites; ++n) split_shape.push_back(col_sizes[n]);
  DenseTensor t = a.reshaped(split_shape);
  std::vector<std::size_t> perm;
  for (std::size_t n = 0; n < n_sites; ++n) {
    perm.push_back(n);
    perm.push_back(n_sites + n);
  }
  t = permute(t, perm);
  std::vector<std::size_t> k_shape(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n)
    k_shape[n] = row_sizes[n] * col_sizes[n];
  TTVector v = tt_from_dense(std::move(t).reshaped(k_shape), delta, rank_caps);
  return matrix_from_extended(v, row_sizes, col_sizes);
}

TTVector extended_vectorize(const TTMatrix& a) {
  std::vector<DenseTensor> cores;
  cores.reserve(a.order());
  std::vector<Ortho> flags;
  for (std::size_t n = 0; n < a.order(); ++n) {
    const DenseTensor& c = a.core(n);
    cores.push_back(c.reshaped({c.dim(0), c.dim(1) * c.dim(2), c.dim(3)}));
    flags.push_back(a.flag(n));
  }
  return TTVector(std::move(cores), std::move(flags));
}

TTMatrix matrix_from_extended(const TTVector& v,
                              std::span<const std::size_t> row_sizes,
                              std::span<const std::size_t> col_sizes) {
  if (row_sizes.size() != v.order() || col_sizes.size() != v.order())
    throw std::invalid_argument("matrix_from_extended: size lists must match order");
  std::vector<DenseTensor> cores;
  cores.reserve(v.order());
  std::vector<Ortho> flags;
  for (std::size_t n = 0; n < v.order(); ++n) {
    const DenseTensor& c = v.core(n);
    if (row_sizes[n] * col_sizes[n] != c.dim(1))
      throw std::invalid_argument("matrix_from_extended: mode " +
                                  std::to_string(n) + " size " +
                                  std::to_string(c.dim(1)) +
                                  " does not factor as " +
                                  std::to_string(row_sizes[n]) + "x" +
                                  std::to_string(col_sizes[n]));
    cores.push_back(c.reshaped({c.dim(0), row_sizes[n], col_sizes[n], c.dim(2)}));
    flags.push_back(v.flag(n));
  }
  return TTMatrix(std::move(cores), std::move(flags));
}

// --- orthogonalization and truncation ----------------------------------------

TTVector orthogonalized(TTVector t, std::size_t pivot) {
  std::vector<DenseTensor> cores = t.cores();
  std::vector<Ortho> flags = t.flags();
  orthogonalize_in_place(cores, flags, pivot);
  return TTVector(std::move(cores), std::move(flags));
}

TTMatrix orthogonalized(TTMatrix a, std::size_t pivot) {
  std::vector<std::size_t> rows = a.row_sizes(), cols = a.col_sizes();
  TTVector v = orthogonalized(extended_vectorize(a), pivot);
  return matrix_from_extended(v, rows, cols);
}

SuperCore merge_cores(const TTVector& t, std::size_t site) {
  check_site(site + 1, t.order(), "merge_cores");
  return SuperCore{mode1_contract(t.core(site), t.core(site + 1)), site};
}

SuperCore merge_cores(const TTMatrix& a, std::size_t site) {
  check_site(site + 1, a.order(), "merge_cores");
  const DenseTensor& l = a.core(site);
  const DenseTensor& r = a.core(site + 1);
  return SuperCore{
      mode1_contract(
          l.reshaped({l.dim(0), l.dim(1) * l.dim(2), l.dim(3)}),
          r.reshaped({r.dim(0), r.dim(1) * r.dim(2), r.dim(3)})),
      site};
}

SplitResult split_supercore(const SuperCore& s, double delta, std::size_t cap,
                            SplitDirection dir) {
  if (s.t.order() != 4)
    throw std::invalid_argument("split_supercore: expected an order-4 supercore");
  if (!all_finite(s.t))
    throw std::invalid_argument("split_supercore: non-finite values in supercore");
  const std::size_t a = s.t.dim(0), k1 = s.t.dim(1), k2 = s.t.dim(2),
                    b = s.t.dim(3);
  auto svd = la::svd_econ(s.t.reshaped({a * k1, k2 * b}));
  const auto trunc = la::truncation_rank(svd.sigma, delta, cap);
  const std::size_t r = trunc.rank;
  const std::size_t kfull = svd.sigma.size();

  DenseTensor left({a * k1, r});
  std::copy(svd.u.data(), svd.u.data() + left.size(), left.data());
  DenseTensor right({r, k2 * b});
  for (std::size_t j = 0; j < k2 * b; ++j)
    for (std::size_t i = 0; i < r; ++i)
      right(i, j) = svd.vt[i + j * kfull];

  if (dir == SplitDirection::left_orthogonal) {
    for (std::size_t j = 0; j < k2 * b; ++j)
      for (std::size_t i = 0; i < r; ++i) right(i, j) *= svd.sigma[i];
  } else {
    for (std::size_t i = 0; i < r; ++i)
      kernels::scal(a * k1, svd.sigma[i], left.data() + i * a * k1);
  }
  return SplitResult{std::move(left).reshaped({a, k1, r}),
                     std::move(right).reshaped({r, k2, b}), r,
                     trunc.discarded_norm};
}

namespace {

TTVector tt_round_impl(const TTVector& t, double delta,
                       std::span<const std::size_t> rank_caps) {
  const std::size_t n_sites = t.order();
  if (!rank_caps.empty() && rank_caps.size() != n_sites - 1)
    throw std::invalid_argument("tt_round: expected " +
                                std::to_string(n_sites - 1) + " rank caps");
  if (n_sites == 1) return t;

  std::vector<DenseTensor> cores = t.cores();
  std::vector<Ortho> flags = t.flags();
  for (std::size_t n = n_sites - 1; n >= 1; --n)
    if (flags[n] != Ortho::right) push_right(cores, flags, n);

  const double norm = std::sqrt(kernels::nrm2sq(cores[0].size(), cores[0].data()));
  const double delta_abs = delta * norm;

  for (std::size_t n = 0; n + 1 < n_sites; ++n) {
    const DenseTensor& c = cores[n];
    const std::size_t a = c.dim(0), k = c.dim(1), b = c.dim(2);
    auto svd = la::svd_econ(c.reshaped({a * k, b}));
    const std::size_t cap = rank_caps.empty() ? 0 : rank_caps[n];
    const auto trunc = la::truncation_rank(svd.sigma, delta_abs, cap);
    const std::size_t r = trunc.rank;
    const std::size_t kfull = svd.sigma.size();

    DenseTensor u({a * k, r});
    std::copy(svd.u.data(), svd.u.data() + u.size(), u.data());
    cores[n] = std::move(u).reshaped({a, k, r});
    flags[n] = Ortho::left;

    DenseTensor sv({r, b});
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t i = 0; i < r; ++i)
        sv(i, j) = svd.sigma[i] * svd.vt[i + j * kfull];
    cores[n + 1] = mode1_contract(sv, cores[n + 1]);
    flags[n + 1] = Ortho::none;
  }
  return TTVector(std::move(cores), std::move(flags));
}

}  // namespace

TTVector tt_round(const TTVector& t, double delta,
                  std::span<const std::size_t> rank_caps) {
  return tt_round_impl(t, delta, rank_caps);
}

TTMatrix tt_round(const TTMatrix& a, double delta,
                  std::span<const std::size_t> rank_caps) {
  std::vector<std::size_t> rows = a.row_sizes(), cols = a.col_sizes();
  TTVector v = tt_round_impl(extended_vectorize(a), delta, rank_caps);
  return matrix_from_extended(v, rows, cols);
}

// --- algebra -------------------------------------------------------------------

double tt_norm(const TTVector& t) {
  if (t.order() == 1)
    return std::sqrt(kernels::nrm2sq(t.core(0).size(), t.core(0).data()));
  TTVector o = orthogonalized(t, 0);
  SuperCore s = merge_cores(o, 0);
  return std::sqrt(kernels::nrm2sq(s.t.size(), s.t.data()));
}

double tt_norm(const TTMatrix& a) { return tt_norm(extended_vectorize(a)); }

double tt_inner(const TTVector& x, const TTVector& y) {
  if (x.order() != y.order() || x.mode_sizes() != y.mode_sizes())
    throw std::invalid_argument("tt_inner: mode sizes differ");
  DenseTensor m({1, 1});
  m(0, 0) = 1.0;
  for (std::size_t n = 0; n < x.order(); ++n) {
    // m(rx, ry) -> contract with x core over rx, then y core over (ry, k).
    DenseTensor t = contract(m, {0}, x.core(n), {0});        // (ry, k, rx')
    m = contract(t, {0, 1}, y.core(n), {0, 1});              // (rx', ry')
  }
  return m(0, 0);
}

TTVector tt_scale(TTVector t, double alpha) {
  std::vector<DenseTensor> cores = t.cores();
  std::vector<Ortho> flags = t.flags();
  kernels::scal(cores[0].size(), alpha, cores[0].data());
  flags[0] = Ortho::none;
  return TTVector(std::move(cores), std::move(flags));
}

TTVector tt_axpby(double alpha, const TTVector& x, double beta,
                  const TTVector& y) {
  if (x.order() != y.order() || x.mode_sizes() != y.mode_sizes())
    throw std::invalid_argument("tt_axpby: mode sizes differ");
  const std::size_t n_sites = x.order();
  if (n_sites == 1) {
    DenseTensor c = x.core(0);
    kernels::scal(c.size(), alpha, c.data());
    kernels::axpy(c.size(), beta, y.core(0).data(), c.data());
    return TTVector({std::move(c)});
  }

  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    const DenseTensor& cx = x.core(n);
    const DenseTensor& cy = y.core(n);
    const std::size_t ax = cx.dim(0), k = cx.dim(1), bx = cx.dim(2);
    const std::size_t ay = cy.dim(0), by = cy.dim(2);
    const bool first = n == 0, last = n + 1 == n_sites;
    const std::size_t a = first ? 1 : ax + ay;
    const std::size_t b = last ? 1 : bx + by;
    DenseTensor c({a, k, b});
    const double wx = first ? alpha : 1.0;
    const double wy = first ? beta : 1.0;
    for (std::size_t kk = 0; kk < k; ++kk) {
      for (std::size_t j = 0; j < bx; ++j)
        for (std::size_t i = 0; i < ax; ++i)
          c(i, kk, j) = wx * cx(i, kk, j);
      const std::size_t oi = first ? 0 : ax;
      const std::size_t oj = last ? 0 : bx;
      for (std::size_t j = 0; j < by; ++j)
        for (std::size_t i = 0; i < ay; ++i)
          c(oi + i, kk, oj + j) += wy * cy(i, kk, j);
    }
    cores.push_back(std::move(c));
  }
  return TTVector(std::move(cores));
}

TTMatrix tt_axpby(double alpha, const TTMatrix& x, double beta,
                  const TTMatrix& y) {
  if (x.row_sizes() != y.row_sizes() || x.col_sizes() != y.col_sizes())
    throw std::invalid_argument("tt_axpby: shapes differ");
  std::vector<std::size_t> rows = x.row_sizes(), cols = x.col_sizes();
  TTVector v = tt_axpby(alpha, extended_vectorize(x), beta, extended_vectorize(y));
  return matrix_from_extended(v, rows, cols);
}

TTVector tt_matvec(const TTMatrix& a, const TTVector& x) {
  if (a.order() != x.order() || a.col_sizes() != x.mode_sizes())
    throw std::invalid_argument("tt_matvec: column sizes of the operator " +
                                shape_str(a.col_sizes()) +
                                " do not match the vector modes " +
                                shape_str(x.mode_sizes()));
  std::vector<DenseTensor> cores;
  cores.reserve(a.order());
  for (std::size_t n = 0; n < a.order(); ++n) {
    // (s, i, s', t, t') -> ((s,t), i, (s',t'))
    DenseTensor c = contract(a.core(n), {2}, x.core(n), {1});
    c = permute(c, {0, 3, 1, 2, 4});
    const std::size_t s = a.core(n).dim(0), sp = a.core(n).dim(3);
    const std::size_t t = x.core(n).dim(0), tp = x.core(n).dim(2);
    cores.push_back(std::move(c).reshaped({s * t, a.row_size(n), sp * tp}));
  }
  return TTVector(std::move(cores));
}

TTMatrix tt_matmat(const TTMatrix& a, const TTMatrix& b) {
  if (a.order() != b.order() || a.col_sizes() != b.row_sizes())
    throw std::invalid_argument("tt_matmat: inner sizes " +
                                shape_str(a.col_sizes()) + " vs " +
                                shape_str(b.row_sizes()) + " do not match");
  std::vector<DenseTensor> cores;
  cores.reserve(a.order());
  for (std::size_t n = 0; n < a.order(); ++n) {
    // (s, i, s', t, j, t') -> ((s,t), i, j, (s',t'))
    DenseTensor c = contract(a.core(n), {2}, b.core(n), {1});
    c = permute(c, {0, 3, 1, 4, 2, 5});
    const std::size_t s = a.core(n).dim(0), sp = a.core(n).dim(3);
    const std::size_t t = b.core(n).dim(0), tp = b.core(n).dim(3);
    cores.push_back(std::move(c).reshaped(
        {s * t, a.row_size(n), b.col_size(n), sp * tp}));
  }
  return TTMatrix(std::move(cores));
}

TTMatrix tt_transpose(const TTMatrix& a) {
  std::vector<DenseTensor> cores;
  cores.reserve(a.order());
  for (std::size_t n = 0; n < a.order(); ++n)
    cores.push_back(permute(a.core(n), {0, 2, 1, 3}));
  return TTMatrix(std::move(cores));
}

// --- random trains -------------------------------------------------------------

namespace {
inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

NormalRng::NormalRng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& w : s_) w = splitmix64(s);
}

double NormalRng::uniform01() {
  // xoshiro256**
  const std::uint64_t result = rotl64(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl64(s_[3], 45);
  return (static_cast<double>(result >> 11) + 1.0) * 0x1.0p-53;  // in (0, 1]
}

double NormalRng::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

DenseTensor NormalRng::tensor(std::vector<std::size_t> shape) {
  DenseTensor t(std::move(shape));
  for (auto& v : t.values()) v = next();
  return t;
}

TTVector tt_random(std::span<const std::size_t> mode_sizes,
                   std::span<const std::size_t> interior_ranks, NormalRng& rng) {
  const std::size_t n_sites = mode_sizes.size();
  if (n_sites == 0) throw std::invalid_argument("tt_random: empty mode list");
  if (interior_ranks.size() != n_sites - 1)
    throw std::invalid_argument("tt_random: expected " +
                                std::to_string(n_sites - 1) + " interior ranks");
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    const std::size_t a = n == 0 ? 1 : interior_ranks[n - 1];
    const std::size_t b = n + 1 == n_sites ? 1 : interior_ranks[n];
    cores.push_back(rng.tensor({a, mode_sizes[n], b}));
  }
  return TTVector(std::move(cores));
}

TTMatrix tt_random(std::span<const std::size_t> row_sizes,
                   std::span<const std::size_t> col_sizes,
                   std::span<const std::size_t> interior_ranks, NormalRng& rng) {
  if (row_sizes.size() != col_sizes.size())
    throw std::invalid_argument("tt_random: row/col lists differ in length");
  std::vector<std::size_t> k(row_sizes.size());
  for (std::size_t n = 0; n < k.size(); ++n) k[n] = row_sizes[n] * col_sizes[n];
  TTVector v = tt_random(k, interior_ranks, rng);
  return matrix_from_extended(v, row_sizes, col_sizes);
}

}  // namespace ttpinv
