#include "ttpinv/lapack.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ttpinv::la {

namespace {

void require_matrix(const DenseTensor& a, const char* who) {
  if (a.order() != 2)
    throw std::invalid_argument(std::string(who) + ": expected a matrix, got " +
                                a.shape_str());
}

[[noreturn]] void lapack_fail(const char* routine, int info) {
  throw std::runtime_error(std::string(routine) + " failed with info=" +
                           std::to_string(info));
}

}  // namespace

SvdResult svd_econ(const DenseTensor& a) {
  require_matrix(a, "svd_econ");
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);

  SvdResult out;
  out.u = DenseTensor::matrix(m, k);
  out.vt = DenseTensor::matrix(k, n);
  out.sigma.assign(static_cast<std::size_t>(k), 0.0);

  DenseTensor work = a;  // gesdd destroys its input
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m,
                                   out.sigma.data(), out.u.data(), m,
                                   out.vt.data(), k);
  if (info != 0) {
    // dgesdd occasionally fails to converge; dgesvd is slower but sturdier.
    work = a;
    std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, k - 1)));
    info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, work.data(), m,
                          out.sigma.data(), out.u.data(), m, out.vt.data(), k,
                          superb.data());
    if (info != 0) lapack_fail("dgesvd", info);
  }
  return out;
}

std::vector<double> singular_values(const DenseTensor& a) {
  require_matrix(a, "singular_values");
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  std::vector<double> sigma(static_cast<std::size_t>(k), 0.0);
  DenseTensor work = a;
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m,
                                   sigma.data(), nullptr, m, nullptr, 1);
  if (info != 0) {
    work = a;
    std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, k - 1)));
    info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'N', 'N', m, n, work.data(), m,
                          sigma.data(), nullptr, m, nullptr, 1, superb.data());
    if (info != 0) lapack_fail("dgesvd", info);
  }
  return sigma;
}

void qr(const DenseTensor& a, DenseTensor& q, DenseTensor& r) {
  require_matrix(a, "qr");
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);

  DenseTensor work = a;
  std::vector<double> tau(static_cast<std::size_t>(k));
  lapack_int info =
      LAPACKE_dgeqrf(LAPACK_COL_MAJOR, m, n, work.data(), m, tau.data());
  if (info != 0) lapack_fail("dgeqrf", info);

  r = DenseTensor::matrix(k, n);
  for (lapack_int j = 0; j < n; ++j)
    for (lapack_int i = 0; i <= std::min<lapack_int>(j, k - 1); ++i)
      r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          work[static_cast<std::size_t>(i + j * m)];

  info = LAPACKE_dorgqr(LAPACK_COL_MAJOR, m, k, k, work.data(), m, tau.data());
  if (info != 0) lapack_fail("dorgqr", info);
  q = DenseTensor::matrix(m, k);
  std::copy(work.data(), work.data() + static_cast<std::size_t>(m) * k, q.data());
}

void lq(const DenseTensor& a, DenseTensor& l, DenseTensor& q) {
  require_matrix(a, "lq");
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);

  DenseTensor work = a;
  std::vector<double> tau(static_cast<std::size_t>(k));
  lapack_int info =
      LAPACKE_dgelqf(LAPACK_COL_MAJOR, m, n, work.data(), m, tau.data());
  if (info != 0) lapack_fail("dgelqf", info);

  l = DenseTensor::matrix(m, k);
  for (lapack_int j = 0; j < k; ++j)
    for (lapack_int i = j; i < m; ++i)
      l(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          work[static_cast<std::size_t>(i + j * m)];

  info = LAPACKE_dorglq(LAPACK_COL_MAJOR, k, n, k, work.data(), m, tau.data());
  if (info != 0) lapack_fail("dorglq", info);
  q = DenseTensor::matrix(k, n);
  for (lapack_int j = 0; j < n; ++j)
    for (lapack_int i = 0; i < k; ++i)
      q(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          work[static_cast<std::size_t>(i + j * m)];
}

std::vector<double> eigh(const DenseTensor& a, DenseTensor* vectors) {
  require_matrix(a, "eigh");
  if (a.rows() != a.cols())
    throw std::invalid_argument("eigh: matrix not square: " + a.shape_str());
  const lapack_int n = static_cast<lapack_int>(a.rows());
  DenseTensor work = a;
  std::vector<double> w(static_cast<std::size_t>(n));
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U',
                                   n, work.data(), n, w.data());
  if (info != 0) lapack_fail("dsyevd", info);
  if (vectors) *vectors = std::move(work);
  return w;
}

DenseTensor solve(const DenseTensor& a, const DenseTensor& b) {
  require_matrix(a, "solve");
  require_matrix(b, "solve");
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw std::invalid_argument("solve: incompatible shapes " + a.shape_str() +
                                " and " + b.shape_str());
  const lapack_int n = static_cast<lapack_int>(a.rows());
  const lapack_int nrhs = static_cast<lapack_int>(b.cols());
  DenseTensor lu = a;
  DenseTensor x = b;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  lapack_int info = LAPACKE_dgesv(LAPACK_COL_MAJOR, n, nrhs, lu.data(), n,
                                  ipiv.data(), x.data(), n);
  if (info != 0) lapack_fail("dgesv", info);
  return x;
}

Truncation truncation_rank(std::span<const double> sigma, double delta,
                           std::size_t cap) {
  const std::size_t k = sigma.size();
  if (k == 0) return {1, 0.0};

  // Singular values at the factorization's own noise floor count as zero,
  // so delta = 0 recovers minimal (numeric) ranks.
  const double noise = sigma[0] * 64.0 * std::numeric_limits<double>::epsilon();
  std::size_t nz = k;
  while (nz > 0 && sigma[nz - 1] <= noise) --nz;

  // Smallest r with ||sigma[r:nz]||_2 <= delta; suffix sums from the tail.
  std::vector<double> tail(k + 1, 0.0);
  for (std::size_t i = nz; i-- > 0;) tail[i] = tail[i + 1] + sigma[i] * sigma[i];
  const double budget = delta * delta;
  std::size_t r = nz;
  while (r > 0 && tail[r - 1] <= budget) --r;

  // Inclusive tie-break: keep values equal to the last kept one.
  constexpr double kTieRel = 1e-12;
  while (r >= 1 && r < k && sigma[r] >= sigma[r - 1] * (1.0 - kTieRel)) ++r;

  if (cap > 0) r = std::min(r, cap);
  if (r == 0) r = 1;
  return {r, std::sqrt(tail[r])};
}

}  // namespace ttpinv::la
