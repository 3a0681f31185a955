#pragma once

// Dense brute-force mirror used for desk-scale verification: closed-form
// regularized pseudoinverses from the SVD, the objective and its minimum,
// and the structural bound checks on a candidate P.

#include <optional>
#include <span>
#include <vector>

#include "ttpinv/dense.hpp"
#include "ttpinv/lapack.hpp"
#include "ttpinv/tt.hpp"

namespace ttpinv {

// P*_lambda = (A A^T + lambda I)^{-1} A B; for lambda = 0 the minimum-norm
// choice (A^dagger)^T B. B defaults to the identity.
DenseTensor dense_pinv_oracle(const DenseTensor& a, double lambda,
                              const DenseTensor* b = nullptr);

// Numeric rank with the usual max(I,J) * eps * sigma_max cutoff.
std::size_t numeric_rank(std::span<const double> sigma, std::size_t rows,
                         std::size_t cols);

// F_lambda^min = J - sum_r sigma_r^2 / (sigma_r^2 + lambda) over the nonzero
// spectrum.
double f_min_from_sigma(std::span<const double> sigma, double lambda,
                        double j_total);

double f_lambda_dense(const DenseTensor& a, const DenseTensor& p, double lambda);

struct DenseOracle {
  DenseTensor a;
  la::SvdResult svd;
  double lambda = 0.0;

  DenseTensor pstar() const;
  double f_min() const;
  double f_lambda(const DenseTensor& p) const;
};

DenseOracle make_dense_oracle(const TTMatrix& a, double lambda);
DenseOracle make_dense_oracle(DenseTensor a, double lambda);

// Margins of the structural inequalities for a candidate P; each margin is
// (bound - achieved), nonnegative when the inequality holds.
struct BoundReport {
  double f_lambda = 0.0;
  double f_min = 0.0;
  double g_lambda = 0.0;
  double lemma_identity_error = 0.0;  // relative error of the G decomposition
  double symmetricity_margin = 0.0;
  double eigenvalue_margin = 0.0;
  double singular_value_margin = 0.0;
  std::optional<double> convergence_margin;  // lambda > 0 only
};

BoundReport oracle_checks(const DenseTensor& a, const DenseTensor& p,
                          double lambda);

}  // namespace ttpinv
