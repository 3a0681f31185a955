#pragma once

// Thin wrappers over LAPACKE factorizations on column-major DenseTensor
// buffers, plus the delta-tail truncation rule used by every SVD split.

#include <cstddef>
#include <span>
#include <vector>

#include "ttpinv/dense.hpp"

namespace ttpinv::la {

struct SvdResult {
  DenseTensor u;              // m x k
  std::vector<double> sigma;  // k, descending
  DenseTensor vt;             // k x n
};

// Economy SVD (k = min(m, n)); dgesdd with dgesvd fallback.
SvdResult svd_econ(const DenseTensor& a);

std::vector<double> singular_values(const DenseTensor& a);

// a (m x n) = q (m x k) r (k x n), k = min(m, n), r upper triangular.
void qr(const DenseTensor& a, DenseTensor& q, DenseTensor& r);

// a (m x n) = l (m x k) q (k x n), q with orthonormal rows.
void lq(const DenseTensor& a, DenseTensor& l, DenseTensor& q);

// Symmetric eigendecomposition, ascending eigenvalues; `vectors` optional.
std::vector<double> eigh(const DenseTensor& a, DenseTensor* vectors = nullptr);

// Solve a x = b for square a (general, partial pivoting); b may have
// multiple columns.
DenseTensor solve(const DenseTensor& a, const DenseTensor& b);

struct Truncation {
  std::size_t rank;           // kept rank, >= 1
  double discarded_norm;      // Euclidean norm of the dropped tail
};

// Smallest rank whose discarded tail has Euclidean norm <= delta (absolute),
// extended over exact-tie runs at the boundary, then capped (cap = 0 means
// uncapped). Always keeps at least one singular value.
Truncation truncation_rank(std::span<const double> sigma, double delta,
                           std::size_t cap);

}  // namespace ttpinv::la
