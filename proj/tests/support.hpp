#pragma once

// Shared helpers for the test suites. The oracles here are written as
// explicit loops, independent of the library's contraction and kernel paths.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "ttpinv/dense.hpp"
#include "ttpinv/tt.hpp"

namespace test_support {

using ttpinv::DenseTensor;
using ttpinv::TTMatrix;
using ttpinv::TTVector;

// Plain triple-loop matrix product.
inline DenseTensor naive_matmul(const DenseTensor& a, const DenseTensor& b) {
  DenseTensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_fro_diff(const DenseTensor& a, const DenseTensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

// Sum-of-Kronecker-products expansion of a vector train: every rank path
// contributes an outer product of core fibers (little-endian, first index
// fastest).
inline std::vector<double> kron_expansion(const TTVector& t) {
  const std::size_t n_sites = t.order();
  std::vector<std::size_t> modes = t.mode_sizes();
  std::size_t total = 1;
  for (std::size_t k : modes) total *= k;
  std::vector<double> x(total, 0.0);

  std::vector<std::size_t> ranks = t.ranks();
  std::vector<std::size_t> rpath(n_sites + 1, 0);  // rpath[0] = rpath[N] = 0
  // Enumerate all interior rank paths.
  std::vector<std::size_t> idx(n_sites, 0);
  auto add_path = [&]() {
    // Walk all mode indices for this path.
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t lin = 0; lin < total; ++lin) {
      double v = 1.0;
      for (std::size_t n = 0; n < n_sites; ++n)
        v *= t.core(n)(rpath[n], idx[n], rpath[n + 1]);
      x[lin] += v;
      for (std::size_t n = 0; n < n_sites; ++n) {
        if (++idx[n] < modes[n]) break;
        idx[n] = 0;
      }
    }
  };
  // Odometer over interior ranks.
  std::vector<std::size_t> ridx(n_sites - 1, 0);
  while (true) {
    for (std::size_t b = 0; b + 1 < n_sites; ++b) rpath[b + 1] = ridx[b];
    add_path();
    std::size_t d = 0;
    for (; d + 1 < n_sites; ++d) {
      if (++ridx[d] < ranks[d + 1]) break;
      ridx[d] = 0;
    }
    if (n_sites == 1 || d + 1 == n_sites) break;
  }
  return x;
}

// Interleaved index <-> (row, col) for the extended vectorization.
inline std::pair<std::size_t, std::size_t> split_interleaved(
    std::size_t k, const std::vector<std::size_t>& rows,
    const std::vector<std::size_t>& cols) {
  std::size_t i = 0, j = 0, istride = 1, jstride = 1;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const std::size_t kn = k % (rows[n] * cols[n]);
    k /= rows[n] * cols[n];
    i += (kn % rows[n]) * istride;
    j += (kn / rows[n]) * jstride;
    istride *= rows[n];
    jstride *= cols[n];
  }
  return {i, j};
}

// vec(A) in the TT-local interleaving (site-wise (i_n, j_n) pairing).
inline std::vector<double> vec_interleaved(const DenseTensor& a,
                                           const std::vector<std::size_t>& rows,
                                           const std::vector<std::size_t>& cols) {
  std::vector<double> v(a.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto [i, j] = split_interleaved(k, rows, cols);
    v[k] = a(i, j);
  }
  return v;
}

// Dense (I_J (x) A A^T) over interleaved indices: entry ((i,j),(i',j')) is
// (A A^T)_{i,i'} delta_{j,j'}.
inline DenseTensor kron_iaat_interleaved(const DenseTensor& a,
                                         const std::vector<std::size_t>& rows,
                                         const std::vector<std::size_t>& cols) {
  DenseTensor aat = naive_matmul(a, ttpinv::transposed(a));
  const std::size_t total = a.rows() * a.cols();
  DenseTensor m({total, total});
  for (std::size_t k2 = 0; k2 < total; ++k2) {
    auto [i2, j2] = split_interleaved(k2, rows, cols);
    for (std::size_t k1 = 0; k1 < total; ++k1) {
      auto [i1, j1] = split_interleaved(k1, rows, cols);
      if (j1 == j2) m(k1, k2) = aat(i1, i2);
    }
  }
  return m;
}

// Dense frame matrix at a pivot: maps the merged two-site core to the full
// interleaved vectorization with all other cores fixed.
inline DenseTensor frame_dense(const TTMatrix& p, std::size_t pivot) {
  const std::size_t n_sites = p.order();
  const TTVector v = ttpinv::extended_vectorize(p);
  std::vector<std::size_t> modes = v.mode_sizes();

  // Dense left part (K_1...K_{p-1}, R_left) and right part (R_right, ...).
  std::size_t left_size = 1;
  for (std::size_t n = 0; n < pivot; ++n) left_size *= modes[n];
  const std::size_t r_left = v.rank(pivot);
  DenseTensor left({left_size, r_left});
  if (pivot == 0) {
    left(0, 0) = 1.0;
  } else {
    DenseTensor cur = v.core(0);
    for (std::size_t n = 1; n < pivot; ++n)
      cur = ttpinv::mode1_contract(cur, v.core(n));
    left = std::move(cur).reshaped({left_size, r_left});
  }

  std::size_t right_size = 1;
  for (std::size_t n = pivot + 2; n < n_sites; ++n) right_size *= modes[n];
  const std::size_t r_right = v.rank(pivot + 2);
  DenseTensor right({r_right, right_size});
  if (pivot + 2 == n_sites) {
    right(0, 0) = 1.0;
  } else {
    DenseTensor cur = v.core(pivot + 2);
    for (std::size_t n = pivot + 3; n < n_sites; ++n)
      cur = ttpinv::mode1_contract(cur, v.core(n));
    right = std::move(cur).reshaped({r_right, right_size});
  }

  const std::size_t kp = modes[pivot];
  const std::size_t kq = modes[pivot + 1];
  std::size_t total = 1;
  for (std::size_t k : modes) total *= k;
  const std::size_t local = r_left * kp * kq * r_right;

  DenseTensor f({total, local});
  for (std::size_t rl = 0; rl < r_left; ++rl)
    for (std::size_t a = 0; a < kp; ++a)
      for (std::size_t b = 0; b < kq; ++b)
        for (std::size_t rr = 0; rr < r_right; ++rr) {
          const std::size_t col =
              rl + r_left * (a + kp * (b + kq * rr));
          for (std::size_t kl = 0; kl < left_size; ++kl)
            for (std::size_t kr = 0; kr < right_size; ++kr) {
              const std::size_t row =
                  kl + left_size * (a + kp * (b + kq * kr));
              f(row, col) = left(kl, rl) * right(rr, kr);
            }
        }
  return f;
}

}  // namespace test_support
