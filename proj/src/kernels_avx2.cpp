// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers reach it only after the CPUID check in kernels.cpp.

#include "ttpinv/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace ttpinv::kernels {
namespace avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d s = _mm_hadd_pd(lo, lo);
  return _mm_cvtsd_f64(s);
}

}  // namespace

double dot(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yi = _mm256_loadu_pd(y + i);
    yi = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), yi);
    _mm256_storeu_pd(y + i, yi);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal(std::size_t n, double alpha, double* x) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double nrm2sq(std::size_t n, const double* x) { return dot(n, x, x); }

namespace {

// C(:,j0..j0+3) += A(:,l) * w[0..3], one pass over A(:,l).
inline void rank1_update4(std::size_t m, const double* al, const double* w,
                          double* c0, double* c1, double* c2, double* c3) {
  const __m256d w0 = _mm256_set1_pd(w[0]);
  const __m256d w1 = _mm256_set1_pd(w[1]);
  const __m256d w2 = _mm256_set1_pd(w[2]);
  const __m256d w3 = _mm256_set1_pd(w[3]);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d av = _mm256_loadu_pd(al + i);
    _mm256_storeu_pd(c0 + i, _mm256_fmadd_pd(av, w0, _mm256_loadu_pd(c0 + i)));
    _mm256_storeu_pd(c1 + i, _mm256_fmadd_pd(av, w1, _mm256_loadu_pd(c1 + i)));
    _mm256_storeu_pd(c2 + i, _mm256_fmadd_pd(av, w2, _mm256_loadu_pd(c2 + i)));
    _mm256_storeu_pd(c3 + i, _mm256_fmadd_pd(av, w3, _mm256_loadu_pd(c3 + i)));
  }
  for (; i < m; ++i) {
    const double av = al[i];
    c0[i] += av * w[0];
    c1[i] += av * w[1];
    c2[i] += av * w[2];
    c3[i] += av * w[3];
  }
}

inline void rank1_update1(std::size_t m, const double* al, double w, double* cj) {
  const __m256d wv = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d av = _mm256_loadu_pd(al + i);
    _mm256_storeu_pd(cj + i, _mm256_fmadd_pd(av, wv, _mm256_loadu_pd(cj + i)));
  }
  for (; i < m; ++i) cj[i] += w * al[i];
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  for (std::size_t j = 0; j < n; ++j) {
    double* cj = c + j * ldc;
    if (beta == 0.0) {
      for (std::size_t i = 0; i < m; ++i) cj[i] = 0.0;
    } else if (beta != 1.0) {
      scal(m, beta, cj);
    }
  }
  if (alpha == 0.0 || m == 0 || n == 0 || k == 0) return;

  if (!trans_a && !trans_b) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      double* c0 = c + (j + 0) * ldc;
      double* c1 = c + (j + 1) * ldc;
      double* c2 = c + (j + 2) * ldc;
      double* c3 = c + (j + 3) * ldc;
      for (std::size_t l = 0; l < k; ++l) {
        const double w[4] = {alpha * b[l + (j + 0) * ldb],
                             alpha * b[l + (j + 1) * ldb],
                             alpha * b[l + (j + 2) * ldb],
                             alpha * b[l + (j + 3) * ldb]};
        rank1_update4(m, a + l * lda, w, c0, c1, c2, c3);
      }
    }
    for (; j < n; ++j) {
      double* cj = c + j * ldc;
      const double* bj = b + j * ldb;
      for (std::size_t l = 0; l < k; ++l)
        rank1_update1(m, a + l * lda, alpha * bj[l], cj);
    }
  } else if (trans_a && !trans_b) {
    for (std::size_t j = 0; j < n; ++j) {
      double* cj = c + j * ldc;
      const double* bj = b + j * ldb;
      for (std::size_t i = 0; i < m; ++i)
        cj[i] += alpha * dot(k, a + i * lda, bj);
    }
  } else if (!trans_a && trans_b) {
    for (std::size_t l = 0; l < k; ++l) {
      const double* al = a + l * lda;
      for (std::size_t j = 0; j < n; ++j)
        rank1_update1(m, al, alpha * b[j + l * ldb], c + j * ldc);
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      double* cj = c + j * ldc;
      for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * lda;
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += ai[l] * b[j + l * ldb];
        cj[i] += alpha * s;
      }
    }
  }
}

}  // namespace avx2

namespace {
constexpr Dispatch kAvx2Table = {
    "avx2",       avx2::dot,    avx2::axpy,
    avx2::scal,   avx2::nrm2sq, avx2::gemm,
};
}

const Dispatch* detail_avx2_table() { return &kAvx2Table; }

}  // namespace ttpinv::kernels

#else

namespace ttpinv::kernels {
const Dispatch* detail_avx2_table() { return nullptr; }
}  // namespace ttpinv::kernels

#endif
