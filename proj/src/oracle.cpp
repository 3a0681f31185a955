#include "ttpinv/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ttpinv {

namespace {

// U diag(w) V^T for the economy factors.
DenseTensor assemble_filtered(const la::SvdResult& svd,
                              std::span<const double> weights) {
  const std::size_t m = svd.u.rows(), k = svd.u.cols();
  DenseTensor uw({m, k});
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < m; ++i) uw(i, j) = svd.u(i, j) * weights[j];
  return matmul(uw, svd.vt);
}

}  // namespace

std::size_t numeric_rank(std::span<const double> sigma, std::size_t rows,
                         std::size_t cols) {
  if (sigma.empty()) return 0;
  const double cutoff = static_cast<double>(std::max(rows, cols)) *
                        std::numeric_limits<double>::epsilon() * sigma[0];
  std::size_t r = 0;
  while (r < sigma.size() && sigma[r] > cutoff) ++r;
  return r;
}

double f_min_from_sigma(std::span<const double> sigma, double lambda,
                        double j_total) {
  double f = j_total;
  std::size_t r = sigma.size();
  if (!sigma.empty()) {
    const double cutoff = sigma[0] * 1e3 * std::numeric_limits<double>::epsilon();
    r = 0;
    while (r < sigma.size() && sigma[r] > cutoff) ++r;
  }
  for (std::size_t i = 0; i < r; ++i) {
    const double s2 = sigma[i] * sigma[i];
    f -= s2 / (s2 + lambda);
  }
  return f;
}

DenseTensor dense_pinv_oracle(const DenseTensor& a, double lambda,
                              const DenseTensor* b) {
  if (a.order() != 2)
    throw std::invalid_argument("dense_pinv_oracle: expected a matrix");
  if (a.size() > kDenseGuard)
    throw std::invalid_argument("dense_pinv_oracle: matrix exceeds desk-scale guard");
  auto svd = la::svd_econ(a);
  const std::size_t k = svd.sigma.size();
  std::vector<double> w(k, 0.0);
  if (lambda > 0.0) {
    for (std::size_t i = 0; i < k; ++i)
      w[i] = svd.sigma[i] / (svd.sigma[i] * svd.sigma[i] + lambda);
  } else {
    const std::size_t r = numeric_rank(svd.sigma, a.rows(), a.cols());
    for (std::size_t i = 0; i < r; ++i) w[i] = 1.0 / svd.sigma[i];
  }
  DenseTensor p = assemble_filtered(svd, w);  // (A A^T + lambda)^-1 A = U diag(w) V^T
  if (b) p = matmul(p, *b);
  return p;
}

double f_lambda_dense(const DenseTensor& a, const DenseTensor& p,
                      double lambda) {
  DenseTensor e = matmul(p, a, true, false);  // P^T A
  for (std::size_t j = 0; j < e.cols(); ++j) e(j, j) -= 1.0;
  const double en = fro_norm(e);
  const double pn = fro_norm(p);
  return en * en + lambda * pn * pn;
}

DenseTensor DenseOracle::pstar() const {
  const std::size_t k = svd.sigma.size();
  std::vector<double> w(k, 0.0);
  if (lambda > 0.0) {
    for (std::size_t i = 0; i < k; ++i)
      w[i] = svd.sigma[i] / (svd.sigma[i] * svd.sigma[i] + lambda);
  } else {
    const std::size_t r = numeric_rank(svd.sigma, a.rows(), a.cols());
    for (std::size_t i = 0; i < r; ++i) w[i] = 1.0 / svd.sigma[i];
  }
  return assemble_filtered(svd, w);
}

double DenseOracle::f_min() const {
  return f_min_from_sigma(svd.sigma, lambda, static_cast<double>(a.cols()));
}

double DenseOracle::f_lambda(const DenseTensor& p) const {
  return f_lambda_dense(a, p, lambda);
}

DenseOracle make_dense_oracle(DenseTensor a, double lambda) {
  if (a.order() != 2)
    throw std::invalid_argument("make_dense_oracle: expected a matrix");
  if (a.size() > kDenseGuard)
    throw std::invalid_argument("make_dense_oracle: matrix exceeds desk-scale guard");
  DenseOracle o;
  o.svd = la::svd_econ(a);
  o.a = std::move(a);
  o.lambda = lambda;
  return o;
}

DenseOracle make_dense_oracle(const TTMatrix& a, double lambda) {
  return make_dense_oracle(tt_to_dense(a), lambda);
}

BoundReport oracle_checks(const DenseTensor& a, const DenseTensor& p,
                          double lambda) {
  if (a.order() != 2 || p.order() != 2 || a.shape() != p.shape())
    throw std::invalid_argument("oracle_checks: A and P must be matrices of equal shape");
  if (a.size() > kDenseGuard)
    throw std::invalid_argument("oracle_checks: matrix exceeds desk-scale guard");

  DenseOracle o = make_dense_oracle(a, lambda);
  const DenseTensor pstar = o.pstar();
  const double j_total = static_cast<double>(a.cols());

  BoundReport rep;
  rep.f_lambda = f_lambda_dense(a, p, lambda);
  rep.f_min = f_min_from_sigma(o.svd.sigma, lambda, j_total);
  rep.g_lambda = rep.f_lambda - rep.f_min;

  DenseTensor dp = p;  // P - P*
  for (std::size_t i = 0; i < dp.size(); ++i) dp[i] -= pstar[i];
  const double dp_norm2 = fro_norm(dp) * fro_norm(dp);

  DenseTensor pta = matmul(p, a, true, false);
  DenseTensor psta = matmul(pstar, a, true, false);

  // G = ||P^T A - P*^T A||^2 + lambda ||P - P*||^2 (exact decomposition).
  DenseTensor diff = pta;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= psta[i];
  const double decomposition = fro_norm(diff) * fro_norm(diff) + lambda * dp_norm2;
  const double scale = std::max({rep.f_lambda, rep.f_min, 1e-300});
  rep.lemma_identity_error = std::abs(rep.g_lambda - decomposition) / scale;

  // || P^T A - A^T P ||_F^2 <= 2 G - 2 lambda ||P - P*||^2
  DenseTensor asym = pta;
  {
    DenseTensor atp = transposed(pta);
    for (std::size_t i = 0; i < asym.size(); ++i) asym[i] -= atp[i];
  }
  rep.symmetricity_margin = 2.0 * rep.g_lambda - 2.0 * lambda * dp_norm2 -
                            fro_norm(asym) * fro_norm(asym);

  // Eigenvalue and singular-value proximity bounds.
  DenseTensor sym = pta;
  {
    DenseTensor t = transposed(pta);
    for (std::size_t i = 0; i < sym.size(); ++i) sym[i] = 0.5 * (sym[i] + t[i]);
  }
  std::vector<double> ev_sym = la::eigh(sym);
  std::vector<double> ev_star = la::eigh(psta);  // symmetric PSD
  std::reverse(ev_sym.begin(), ev_sym.end());
  std::reverse(ev_star.begin(), ev_star.end());
  double ev_dist = 0.0;
  for (std::size_t i = 0; i < ev_sym.size(); ++i) {
    const double d = ev_sym[i] - ev_star[i];
    ev_dist += d * d;
  }
  rep.eigenvalue_margin = rep.g_lambda - lambda * dp_norm2 - ev_dist;

  std::vector<double> sv_pta = la::singular_values(pta);
  std::vector<double> sv_star = la::singular_values(psta);
  double sv_dist = 0.0;
  for (std::size_t i = 0; i < sv_pta.size(); ++i) {
    const double d = sv_pta[i] - sv_star[i];
    sv_dist += d * d;
  }
  rep.singular_value_margin = rep.g_lambda - lambda * dp_norm2 - sv_dist;

  if (lambda > 0.0) {
    // ||P* - P||^2 <= ||(A A^T + lambda I)^{-1}||_2^2 ||R||_F^2,
    // R = A - (A A^T + lambda I) P.
    DenseTensor aat = matmul(a, a, false, true);
    for (std::size_t i = 0; i < aat.rows(); ++i) aat(i, i) += lambda;
    DenseTensor res = matmul(aat, p);
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = a[i] - res[i];
    const double smin2 =
        o.svd.sigma.empty()
            ? lambda
            : o.svd.sigma.back() * o.svd.sigma.back() + lambda;
    const double inv_norm =
        1.0 / (a.rows() > a.cols() ? lambda : smin2);  // AA^T singular if I > J
    const double rhs = inv_norm * inv_norm * fro_norm(res) * fro_norm(res);
    rep.convergence_margin = rhs - dp_norm2;
  }
  return rep;
}

}  // namespace ttpinv
