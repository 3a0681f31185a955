#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ttpinv/kernels.hpp"
#include "ttpinv/tt.hpp"

using namespace ttpinv;

namespace {

std::vector<double> random_vec(std::size_t n, NormalRng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next();
  return v;
}

// Reference gemm, plain index arithmetic.
void ref_gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
              double alpha, const std::vector<double>& a, std::size_t lda,
              const std::vector<double>& b, std::size_t ldb, double beta,
              std::vector<double>& c, std::size_t ldc) {
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) {
        const double av = ta ? a[l + i * lda] : a[i + l * lda];
        const double bv = tb ? b[j + l * ldb] : b[l + j * ldb];
        s += av * bv;
      }
      c[i + j * ldc] = alpha * s + beta * c[i + j * ldc];
    }
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(kernels::available(kernels::Isa::scalar));
  const auto& t = kernels::table(kernels::Isa::scalar);
  const double x[3] = {1, 2, 3};
  const double y[3] = {4, 5, 6};
  CHECK(t.dot(3, x, y) == doctest::Approx(32.0));
  CHECK(t.nrm2sq(3, x) == doctest::Approx(14.0));
}

TEST_CASE("axpy and scal match direct evaluation") {
  NormalRng rng(11);
  for (std::size_t n : {1u, 5u, 16u, 33u}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);
    auto expect = y;
    for (std::size_t i = 0; i < n; ++i) expect[i] += 0.7 * x[i];
    auto got = y;
    kernels::axpy(n, 0.7, x.data(), got.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-14));

    auto scaled = x;
    kernels::scal(n, -1.5, scaled.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(scaled[i] == doctest::Approx(-1.5 * x[i]).epsilon(1e-14));
  }
}

TEST_CASE("gemm agrees with the reference for all transpose combinations") {
  NormalRng rng(23);
  for (auto isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
    if (!kernels::available(isa)) continue;
    const auto& t = kernels::table(isa);
    for (int ta = 0; ta < 2; ++ta)
      for (int tb = 0; tb < 2; ++tb)
        for (std::size_t trial = 0; trial < 6; ++trial) {
          const std::size_t m = 1 + (trial * 7 + 3) % 23;
          const std::size_t n = 1 + (trial * 11 + 5) % 19;
          const std::size_t k = 1 + (trial * 5 + 1) % 17;
          const std::size_t lda = ta ? k : m;
          const std::size_t ldb = tb ? n : k;
          auto a = random_vec(lda * (ta ? m : k), rng);
          auto b = random_vec(ldb * (tb ? k : n), rng);
          auto c0 = random_vec(m * n, rng);

          auto expect = c0;
          ref_gemm(ta, tb, m, n, k, 1.3, a, lda, b, ldb, 0.4, expect, m);
          auto got = c0;
          t.gemm(ta, tb, m, n, k, 1.3, a.data(), lda, b.data(), ldb, 0.4,
                 got.data(), m);
          double max_err = 0.0;
          for (std::size_t i = 0; i < got.size(); ++i)
            max_err = std::max(max_err, std::abs(got[i] - expect[i]));
          CHECK(max_err < 1e-11);
        }
  }
}

TEST_CASE("simd variants agree with the scalar reference") {
  if (!kernels::available(kernels::Isa::avx2)) {
    MESSAGE("avx2 unavailable on this host; dispatch falls back to scalar");
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    return;
  }
  const auto& s = kernels::table(kernels::Isa::scalar);
  const auto& v = kernels::table(kernels::Isa::avx2);
  NormalRng rng(37);
  for (std::size_t n : {1u, 2u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 257u}) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);
    const double scale = std::sqrt(s.nrm2sq(n, x.data()) * s.nrm2sq(n, y.data())) + 1.0;
    CHECK(std::abs(s.dot(n, x.data(), y.data()) - v.dot(n, x.data(), y.data())) <
          1e-13 * scale);
    CHECK(std::abs(s.nrm2sq(n, x.data()) - v.nrm2sq(n, x.data())) <
          1e-13 * (s.nrm2sq(n, x.data()) + 1.0));

    auto ys = y, yv = y;
    s.axpy(n, 0.3, x.data(), ys.data());
    v.axpy(n, 0.3, x.data(), yv.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(ys[i] == doctest::Approx(yv[i]).epsilon(1e-13));
  }

  // gemm equivalence over a grid of shapes.
  for (std::size_t trial = 0; trial < 12; ++trial) {
    const std::size_t m = 1 + (trial * 13 + 2) % 40;
    const std::size_t n = 1 + (trial * 17 + 7) % 37;
    const std::size_t k = 1 + (trial * 19 + 3) % 29;
    const bool ta = trial % 2, tb = (trial / 2) % 2;
    const std::size_t lda = ta ? k : m;
    const std::size_t ldb = tb ? n : k;
    auto a = random_vec(lda * (ta ? m : k), rng);
    auto b = random_vec(ldb * (tb ? k : n), rng);
    std::vector<double> cs(m * n, 0.0), cv(m * n, 0.0);
    s.gemm(ta, tb, m, n, k, 1.0, a.data(), lda, b.data(), ldb, 0.0, cs.data(), m);
    v.gemm(ta, tb, m, n, k, 1.0, a.data(), lda, b.data(), ldb, 0.0, cv.data(), m);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      scale = std::max(scale, std::abs(cs[i]));
      err = std::max(err, std::abs(cs[i] - cv[i]));
    }
    CHECK(err <= 1e-12 * (scale + 1.0));
  }
}

TEST_CASE("force pins the active table") {
  kernels::force(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  if (kernels::available(kernels::Isa::avx2)) {
    kernels::force(kernels::Isa::avx2);
    CHECK(kernels::active_isa() == kernels::Isa::avx2);
  }
}
