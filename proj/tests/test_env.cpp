#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "ttpinv/env.hpp"
#include "ttpinv/lapack.hpp"
#include "ttpinv/mals.hpp"
#include "ttpinv/tt.hpp"

using namespace ttpinv;
using test_support::frame_dense;
using test_support::kron_iaat_interleaved;
using test_support::max_abs_diff;
using test_support::naive_matmul;
using test_support::vec_interleaved;

namespace {

DenseTensor identity_core2() {
  DenseTensor c({1, 2, 2, 1});
  c(0, 0, 0, 0) = 1.0;
  c(0, 1, 1, 0) = 1.0;
  return c;
}

// Dense A_bar and b_bar through the frame matrix; independent of the
// environment recursions.
struct DenseLocal {
  DenseTensor a_bar;
  std::vector<double> b_bar;
};

DenseLocal dense_local(const TTMatrix& a, const TTMatrix& p, std::size_t pivot) {
  DenseTensor f = frame_dense(p, pivot);
  DenseTensor m = kron_iaat_interleaved(tt_to_dense(a), a.row_sizes(), a.col_sizes());
  DenseTensor ftm = naive_matmul(transposed(f), m);
  DenseLocal out;
  out.a_bar = naive_matmul(ftm, f);
  std::vector<double> av =
      vec_interleaved(tt_to_dense(a), a.row_sizes(), a.col_sizes());
  out.b_bar.assign(f.cols(), 0.0);
  for (std::size_t c = 0; c < f.cols(); ++c)
    for (std::size_t r = 0; r < f.rows(); ++r)
      out.b_bar[c] += f(r, c) * av[r];
  return out;
}

LocalProblem make_lp(const TTMatrix& a, const TTMatrix& p, std::size_t pivot,
                     double lambda) {
  const std::size_t n_sites = a.order();
  EnvBlocks env = EnvBlocks::boundaries(n_sites);
  for (std::size_t m = 0; m < pivot; ++m)
    env.update_left(m, p.core(m), a.core(m));
  for (std::size_t m = n_sites - 1; m + 1 > pivot + 2; --m)
    env.update_right(m, p.core(m), a.core(m));
  return LocalProblem(env.l1[pivot], env.r1[pivot + 2], env.l2[pivot],
                      env.r2[pivot + 2], a.core(pivot), a.core(pivot + 1),
                      lambda, pivot);
}

}  // namespace

TEST_CASE("site blocks of identity cores are the 1x1 value 2") {
  DenseTensor c = identity_core2();
  SiteBlocks blocks = site_blocks(c, c);
  CHECK(blocks.z1.rows() == 1);
  CHECK(blocks.z1.cols() == 1);
  CHECK(blocks.z1[0] == doctest::Approx(2.0));
  CHECK(blocks.z2[0] == doctest::Approx(2.0));
}

TEST_CASE("products of Z blocks evaluate the trace terms") {
  // Identity trains, N = 2: trace(P^T A) = trace(I_4) = 4 and
  // trace(P^T A A^T P) = 4.
  std::vector<std::size_t> modes{2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  SiteBlocks b0 = site_blocks(eye.core(0), eye.core(0));
  SiteBlocks b1 = site_blocks(eye.core(1), eye.core(1));
  CHECK(naive_matmul(b0.z2, b1.z2)[0] == doctest::Approx(4.0));
  CHECK(naive_matmul(b0.z1, b1.z1)[0] == doctest::Approx(4.0));

  // Random trains against dense traces.
  NormalRng rng(41);
  std::vector<std::size_t> ranks{2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2}, rng);
  TTMatrix p = tt_random(modes, modes, std::vector<std::size_t>{2}, rng);
  SiteBlocks pa0 = site_blocks(p.core(0), a.core(0));
  SiteBlocks pa1 = site_blocks(p.core(1), a.core(1));
  DenseTensor ad = tt_to_dense(a), pd = tt_to_dense(p);
  DenseTensor pta = naive_matmul(transposed(pd), ad);
  double tr_pta = 0.0;
  for (std::size_t i = 0; i < pta.rows(); ++i) tr_pta += pta(i, i);
  CHECK(naive_matmul(pa0.z2, pa1.z2)[0] == doctest::Approx(tr_pta).epsilon(1e-12));

  DenseTensor aat = naive_matmul(ad, transposed(ad));
  DenseTensor paat = naive_matmul(transposed(pd), naive_matmul(aat, pd));
  double tr_paat = 0.0;
  for (std::size_t i = 0; i < paat.rows(); ++i) tr_paat += paat(i, i);
  CHECK(naive_matmul(pa0.z1, pa1.z1)[0] ==
        doctest::Approx(tr_paat).epsilon(1e-12));
}

TEST_CASE("environment advances mirror the Z-block recursion") {
  NormalRng rng(43);
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 3}, rng);
  TTMatrix p = tt_random(modes, modes, std::vector<std::size_t>{3, 2}, rng);

  // vec(L^{<m+1})^T = vec(L^{<m})^T Z^{(m)} in the Kronecker flattening.
  DenseTensor l1 = scalar_env1();
  DenseTensor l2 = scalar_env2();
  for (std::size_t m = 0; m < 2; ++m) {
    SiteBlocks z = site_blocks(p.core(m), a.core(m));
    DenseTensor lv1 = env_as_z_vector(l1);
    DenseTensor lv2 = env_as_z_vector(l2);
    DenseTensor next1 = advance_left_l1(l1, p.core(m), a.core(m));
    DenseTensor next2 = advance_left_l2(l2, p.core(m), a.core(m));
    DenseTensor expect1 =
        naive_matmul(lv1.reshaped({std::size_t{1}, lv1.size()}), z.z1);
    DenseTensor expect2 =
        naive_matmul(lv2.reshaped({std::size_t{1}, lv2.size()}), z.z2);
    CHECK(max_abs_diff(env_as_z_vector(next1).reshaped(
                           {std::size_t{1}, next1.size()}),
                       expect1) < 1e-12);
    CHECK(max_abs_diff(env_as_z_vector(next2).reshaped(
                           {std::size_t{1}, next2.size()}),
                       expect2) < 1e-12);
    l1 = std::move(next1);
    l2 = std::move(next2);
  }
}

TEST_CASE("left boundary environment is the scalar one") {
  EnvBlocks env = EnvBlocks::boundaries(3);
  CHECK(env.l1[0].size() == 1);
  CHECK(env.l1[0][0] == 1.0);
  CHECK(env.l2[0][0] == 1.0);
  CHECK(env.r1[3][0] == 1.0);
}

TEST_CASE("identity trains collapse the left environment to powers of two") {
  std::vector<std::size_t> modes{2, 2, 2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  EnvBlocks env = EnvBlocks::boundaries(4);
  for (std::size_t m = 0; m < 3; ++m) {
    env.update_left(m, eye.core(m), eye.core(m));
    CHECK(env.l1[m + 1].size() == 1);
    CHECK(env.l1[m + 1][0] == doctest::Approx(std::pow(2.0, double(m + 1))));
  }
}

TEST_CASE("left and right environments agree on the trace at every split") {
  NormalRng rng(47);
  std::vector<std::size_t> modes{2, 2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2, 2}, rng);
  TTMatrix p = tt_random(modes, modes, std::vector<std::size_t>{2, 3, 2}, rng);

  const std::size_t n_sites = 4;
  EnvBlocks env = EnvBlocks::boundaries(n_sites);
  for (std::size_t m = 0; m < n_sites; ++m)
    env.update_left(m, p.core(m), a.core(m));
  for (std::size_t m = n_sites; m-- > 0;)
    env.update_right(m, p.core(m), a.core(m));

  auto contract_all = [](const DenseTensor& l, const DenseTensor& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) s += l[i] * r[i];
    return s;
  };
  const double t1 = contract_all(env.l1[0], env.r1[0]);
  const double t2 = contract_all(env.l2[0], env.r2[0]);
  for (std::size_t m = 1; m <= n_sites; ++m) {
    CHECK(contract_all(env.l1[m], env.r1[m]) ==
          doctest::Approx(t1).epsilon(1e-12));
    CHECK(contract_all(env.l2[m], env.r2[m]) ==
          doctest::Approx(t2).epsilon(1e-12));
  }
}

TEST_CASE("identity operator with orthonormal frames gives the identity local operator") {
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  TTMatrix p = init_guess(modes, modes, std::vector<std::size_t>{2, 2}, 3);
  p = orthogonalized(p, 0);
  LocalProblem lp = make_lp(eye, p, 0, 0.0);
  NormalRng rng(51);
  std::vector<double> x(lp.dim());
  for (auto& v : x) v = rng.next();
  std::vector<double> y = lp.apply(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("identity trains at N=2 give the vectorized merged supercore as rhs") {
  std::vector<std::size_t> modes{2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  LocalProblem lp = make_lp(eye, eye, 0, 0.0);
  SuperCore sc = merge_cores(eye, 0);
  REQUIRE(lp.rhs().size() == sc.t.size());
  for (std::size_t i = 0; i < sc.t.size(); ++i)
    CHECK(lp.rhs()[i] == doctest::Approx(sc.t[i]).epsilon(1e-14));
}

TEST_CASE("local operator and rhs match the dense frame assembly") {
  NormalRng rng(53);
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  TTMatrix p0 = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);

  for (std::size_t pivot = 0; pivot <= 1; ++pivot) {
    TTMatrix p = orthogonalized(p0, pivot);
    LocalProblem lp = make_lp(a, p, pivot, 0.0);
    DenseLocal ref = dense_local(a, p, pivot);

    // Operator agreement on random vectors.
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> x(lp.dim());
      for (auto& v : x) v = rng.next();
      std::vector<double> y = lp.apply(x);
      std::vector<double> yref(lp.dim(), 0.0);
      for (std::size_t c = 0; c < lp.dim(); ++c)
        for (std::size_t r = 0; r < lp.dim(); ++r)
          yref[r] += ref.a_bar(r, c) * x[c];
      double scale = 0.0, err = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        scale = std::max(scale, std::abs(yref[i]));
        err = std::max(err, std::abs(y[i] - yref[i]));
      }
      CHECK(err <= 1e-10 * (scale + 1.0));
    }

    // Right-hand side agreement.
    double berr = 0.0, bscale = 0.0;
    for (std::size_t i = 0; i < lp.dim(); ++i) {
      berr = std::max(berr, std::abs(lp.rhs()[i] - ref.b_bar[i]));
      bscale = std::max(bscale, std::abs(ref.b_bar[i]));
    }
    CHECK(berr <= 1e-10 * (bscale + 1.0));

    // ||b_bar|| <= ||A||_F under an orthonormal frame.
    double bn = 0.0;
    for (double v : lp.rhs()) bn += v * v;
    CHECK(std::sqrt(bn) <= tt_norm(a) + 1e-10);
  }
}

TEST_CASE("local operator is linear, symmetric, and positive semidefinite") {
  NormalRng rng(57);
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  TTMatrix p = orthogonalized(
      tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng), 1);
  LocalProblem lp = make_lp(a, p, 1, 0.0);

  std::vector<double> x(lp.dim()), y(lp.dim());
  for (auto& v : x) v = rng.next();
  for (auto& v : y) v = rng.next();

  // Linearity.
  std::vector<double> combo(lp.dim());
  for (std::size_t i = 0; i < x.size(); ++i) combo[i] = 0.3 * x[i] - 1.7 * y[i];
  std::vector<double> lhs = lp.apply(combo);
  std::vector<double> ax = lp.apply(x), ay = lp.apply(y);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(lhs[i] == doctest::Approx(0.3 * ax[i] - 1.7 * ay[i]).epsilon(1e-12));

  // Symmetry: <y, A x> = <x, A y>.
  double yax = 0.0, xay = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    yax += y[i] * ax[i];
    xay += x[i] * ay[i];
    scale += std::abs(y[i] * ax[i]);
  }
  CHECK(std::abs(yax - xay) <= 1e-10 * (scale + 1.0));

  // PSD: <x, A x> >= -1e-10 ||x||^2.
  double xax = 0.0, xx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xax += x[i] * ax[i];
    xx += x[i] * x[i];
  }
  CHECK(xax >= -1e-10 * xx);
}

TEST_CASE("spectrum of the local operator interlaces the spectrum of A A^T") {
  NormalRng rng(61);
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  TTMatrix p = orthogonalized(
      tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng), 1);
  LocalProblem lp = make_lp(a, p, 1, 0.0);

  // Densify A_bar by applying to unit vectors.
  DenseTensor abar({lp.dim(), lp.dim()});
  for (std::size_t c = 0; c < lp.dim(); ++c) {
    std::vector<double> e(lp.dim(), 0.0);
    e[c] = 1.0;
    std::vector<double> col = lp.apply(e);
    for (std::size_t r = 0; r < lp.dim(); ++r) abar(r, c) = col[r];
  }
  auto ev_bar = la::eigh(abar);

  DenseTensor ad = tt_to_dense(a);
  DenseTensor aat = naive_matmul(ad, transposed(ad));
  auto ev_aat = la::eigh(aat);

  CHECK(ev_bar.front() >= ev_aat.front() - 1e-8);
  CHECK(ev_bar.back() <= ev_aat.back() + 1e-8);
}

TEST_CASE("missing environments are reported") {
  EnvBlocks env = EnvBlocks::boundaries(4);
  std::vector<std::size_t> modes{2, 2, 2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  CHECK_THROWS_AS(env.update_left(2, eye.core(2), eye.core(2)),
                  std::invalid_argument);
}
