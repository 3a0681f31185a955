#pragma once

// Dense arithmetic kernels underneath all tensor contractions.
//
// Every kernel exists as a portable scalar reference and, where the build
// and the host CPU support it, an AVX2/FMA variant. The active table is
// selected once at startup from CPUID and can be overridden (tests compare
// the variants, deterministic mode pins the scalar path).
//
// Matrices are column-major: entry (i,j) of an m x n matrix with leading
// dimension ld lives at data[i + j*ld]. This matches the little-endian
// (first index fastest) layout used throughout the library and by LAPACK.

#include <cstddef>
#include <string>

namespace ttpinv::kernels {

enum class Isa { scalar, avx2 };

struct Dispatch {
  const char* name;

  double (*dot)(std::size_t n, const double* x, const double* y);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  void (*scal)(std::size_t n, double alpha, double* x);
  double (*nrm2sq)(std::size_t n, const double* x);

  // C = alpha * op(A) * op(B) + beta * C,  op(X) = X or X^T, column-major.
  // C is m x n, the contracted dimension is k.
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double beta, double* c,
               std::size_t ldc);
};

bool available(Isa isa);
const Dispatch& table(Isa isa);

// Active table: auto-selected on first use, sticky after force().
const Dispatch& active();
Isa active_isa();
void force(Isa isa);

std::string isa_name(Isa isa);

// Convenience forwarders through the active table.
inline double dot(std::size_t n, const double* x, const double* y) {
  return active().dot(n, x, y);
}
inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
  active().axpy(n, alpha, x, y);
}
inline void scal(std::size_t n, double alpha, double* x) {
  active().scal(n, alpha, x);
}
inline double nrm2sq(std::size_t n, const double* x) {
  return active().nrm2sq(n, x);
}
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                 std::size_t k, double alpha, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double beta, double* c,
                 std::size_t ldc) {
  active().gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace ttpinv::kernels
