#include "ttpinv/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace ttpinv::kernels {

namespace scalar {

double dot(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal(std::size_t n, double alpha, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double nrm2sq(std::size_t n, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  for (std::size_t j = 0; j < n; ++j) {
    double* cj = c + j * ldc;
    if (beta == 0.0) {
      for (std::size_t i = 0; i < m; ++i) cj[i] = 0.0;
    } else if (beta != 1.0) {
      for (std::size_t i = 0; i < m; ++i) cj[i] *= beta;
    }
  }
  if (alpha == 0.0 || m == 0 || n == 0 || k == 0) return;

  if (!trans_a && !trans_b) {
    // C(:,j) += alpha * B(k,j) * A(:,k)
    for (std::size_t j = 0; j < n; ++j) {
      double* cj = c + j * ldc;
      const double* bj = b + j * ldb;
      for (std::size_t l = 0; l < k; ++l) {
        const double w = alpha * bj[l];
        const double* al = a + l * lda;
        for (std::size_t i = 0; i < m; ++i) cj[i] += w * al[i];
      }
    }
  } else if (trans_a && !trans_b) {
    // C(i,j) += alpha * dot(A(:,i), B(:,j))
    for (std::size_t j = 0; j < n; ++j) {
      double* cj = c + j * ldc;
      const double* bj = b + j * ldb;
      for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * lda;
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
        cj[i] += alpha * s;
      }
    }
  } else if (!trans_a && trans_b) {
    // C(:,j) += alpha * B(j,l) * A(:,l)
    for (std::size_t l = 0; l < k; ++l) {
      const double* al = a + l * lda;
      for (std::size_t j = 0; j < n; ++j) {
        const double w = alpha * b[j + l * ldb];
        double* cj = c + j * ldc;
        for (std::size_t i = 0; i < m; ++i) cj[i] += w * al[i];
      }
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

}  // namespace scalar

namespace {

constexpr Dispatch kScalarTable = {
    "scalar",     scalar::dot,    scalar::axpy,
    scalar::scal, scalar::nrm2sq, scalar::gemm,
};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const Dispatch*> g_active{nullptr};

}  // namespace

// Defined in kernels_avx2.cpp; null table name when not compiled in.
const Dispatch* detail_avx2_table();

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return detail_avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const Dispatch& table(Isa isa) {
  if (isa == Isa::avx2) {
    const Dispatch* t = detail_avx2_table();
    if (t == nullptr || !cpu_has_avx2())
      throw std::runtime_error("kernels: avx2 table unavailable on this host");
    return *t;
  }
  return kScalarTable;
}

const Dispatch& active() {
  const Dispatch* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = available(Isa::avx2) ? &table(Isa::avx2) : &kScalarTable;
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Isa active_isa() {
  return &active() == &kScalarTable ? Isa::scalar : Isa::avx2;
}

void force(Isa isa) { g_active.store(&table(isa), std::memory_order_release); }

std::string isa_name(Isa isa) {
  return isa == Isa::scalar ? "scalar" : "avx2";
}

}  // namespace ttpinv::kernels
