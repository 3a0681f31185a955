#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "ttpinv/gallery.hpp"
#include "ttpinv/linsolve.hpp"
#include "ttpinv/mals.hpp"
#include "ttpinv/oracle.hpp"

using namespace ttpinv;
using test_support::max_abs_diff;
using test_support::naive_matmul;
using test_support::rel_fro_diff;

TEST_CASE("krylov: identity operator converges immediately") {
  const LinOp eye = [](std::span<const double> x, std::span<double> y) {
    std::copy(x.begin(), x.end(), y.begin());
  };
  const std::vector<double> b{1.0, -2.0, 3.0};
  for (auto method : {KrylovMethod::cg, KrylovMethod::gmres, KrylovMethod::bicgstab}) {
    KrylovConfig cfg;
    cfg.method = method;
    cfg.tol = 1e-12;
    auto res = krylov_solve(eye, b, cfg);
    CHECK(res.converged);
    CHECK(res.iters <= 2);
    for (std::size_t i = 0; i < b.size(); ++i)
      CHECK(res.x[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("cg terminates exactly on a small SPD diagonal") {
  const LinOp diag = [](std::span<const double> x, std::span<double> y) {
    const double d[] = {1.0, 2.0, 3.0, 4.0};
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = d[i] * x[i];
  };
  const std::vector<double> b{1.0, 1.0, 1.0, 1.0};
  KrylovConfig cfg;
  cfg.method = KrylovMethod::cg;
  cfg.tol = 1e-13;
  auto res = krylov_solve(diag, b, cfg);
  CHECK(res.converged);
  CHECK(res.iters <= 4);
  const double expect[] = {1.0, 0.5, 1.0 / 3.0, 0.25};
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(res.x[i] == doctest::Approx(expect[i]).epsilon(1e-11));
}

TEST_CASE("gmres solves a rotation-like nonsymmetric system") {
  // [[0, -1], [1, 0]] x = b -> x = [b2, -b1]
  const LinOp rot = [](std::span<const double> x, std::span<double> y) {
    y[0] = -x[1];
    y[1] = x[0];
  };
  const std::vector<double> b{0.3, -1.2};
  KrylovConfig cfg;
  cfg.method = KrylovMethod::gmres;
  cfg.tol = 1e-12;
  auto res = krylov_solve(rot, b, cfg);
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(-1.2).epsilon(1e-10));
  CHECK(res.x[1] == doctest::Approx(-0.3).epsilon(1e-10));
}

TEST_CASE("bicgstab matches the dense solution on a random SPD system") {
  NormalRng rng(3);
  DenseTensor g = rng.tensor({5, 5});
  DenseTensor a = naive_matmul(g, transposed(g));
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 5.0;
  const LinOp op = [&a](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
  };
  std::vector<double> b{1, 2, 3, 4, 5};
  KrylovConfig cfg;
  cfg.method = KrylovMethod::bicgstab;
  cfg.tol = 1e-11;
  auto res = krylov_solve(op, b, cfg);
  CHECK(res.converged);
  DenseTensor bd({5, 1}, std::vector<double>(b.begin(), b.end()));
  DenseTensor ref = la::solve(a, bd);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(res.x[i] == doctest::Approx(ref[i]).epsilon(1e-8));
}

TEST_CASE("mals_linsolve: identity system returns the rhs in one sweep") {
  std::vector<std::size_t> modes{2, 2, 2};
  NormalRng rng(7);
  TTVector b = tt_random(modes, std::vector<std::size_t>{2, 2}, rng);
  LinearSystemTT sys{TTMatrix::identity(modes), b, true};
  LinsolveConfig cfg;
  cfg.tol = 1e-10;
  LinsolveResult res = mals_linsolve(sys, cfg);
  CHECK(res.converged);
  CHECK(res.trace.sweeps == 1);
  CHECK(rel_fro_diff(tt_to_dense(res.x), tt_to_dense(b)) < 1e-9);
}

TEST_CASE("mals_linsolve recovers the ones vector on the N=6 laplacian") {
  TTMatrix a = gen_laplace(6);
  std::vector<std::size_t> modes(6, 2);
  TTVector ones = TTVector::ones(modes);
  TTVector b = tt_round(tt_matvec(a, ones), 1e-14);

  LinearSystemTT sys{a, b, true};
  LinsolveConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_sweeps = 30;
  cfg.max_rank = 20;
  LinsolveResult res = mals_linsolve(sys, cfg);
  CHECK(res.converged);
  CHECK(res.rel_residual <= cfg.tol);
  CHECK(rel_fro_diff(tt_to_dense(res.x), tt_to_dense(ones)) < 1e-6);
}

TEST_CASE("linsolve residual trace never increases") {
  TTMatrix a = gen_laplace(5);
  std::vector<std::size_t> modes(5, 2);
  NormalRng rng(11);
  TTVector b = tt_round(tt_matvec(a, tt_random(modes, std::vector<std::size_t>{2, 2, 2, 2}, rng)), 1e-12);
  LinearSystemTT sys{a, b, true};
  LinsolveConfig cfg;
  cfg.tol = 1e-9;
  cfg.max_sweeps = 20;
  LinsolveResult res = mals_linsolve(sys, cfg);
  for (std::size_t i = 1; i < res.trace.rows.size(); ++i)
    CHECK(res.trace.rows[i].rel_residual <=
          res.trace.rows[i - 1].rel_residual + 1e-12);
}

TEST_CASE("build_preconditioned_system: identity preconditioner is a no-op") {
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  NormalRng rng(13);
  TTVector b = tt_random(modes, std::vector<std::size_t>{2, 2}, rng);
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);

  PrecondSystem pre = build_preconditioned_system(a, eye, b, 0.0);
  CHECK(rel_fro_diff(tt_to_dense(pre.sys.m), tt_to_dense(a)) < 1e-12);
  CHECK(rel_fro_diff(tt_to_dense(pre.sys.b), tt_to_dense(b)) < 1e-12);
}

TEST_CASE("preconditioned operator ranks multiply before rounding") {
  std::vector<std::size_t> modes{2, 2};
  NormalRng rng(17);
  TTMatrix p = tt_random(modes, modes, std::vector<std::size_t>{3}, rng);
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2}, rng);
  TTVector b = tt_random(modes, std::vector<std::size_t>{2}, rng);
  PrecondSystem pre = build_preconditioned_system(a, p, b, 0.0);
  CHECK(pre.op_ranks_before == std::vector<std::size_t>{1, 6, 1});
}

TEST_CASE("preconditioned system matches dense products") {
  std::vector<std::size_t> modes{2, 2, 2};
  NormalRng rng(19);
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  TTMatrix p = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  TTVector b = tt_random(modes, std::vector<std::size_t>{2, 2}, rng);

  PrecondSystem pre = build_preconditioned_system(a, p, b, 0.0);
  DenseTensor ref = naive_matmul(transposed(tt_to_dense(p)), tt_to_dense(a));
  CHECK(rel_fro_diff(tt_to_dense(pre.sys.m), ref) < 1e-10);

  DenseTensor bd = tt_to_dense(b).reshaped({std::size_t{8}, std::size_t{1}});
  DenseTensor rhs_ref = naive_matmul(transposed(tt_to_dense(p)), bd);
  CHECK(rel_fro_diff(
            tt_to_dense(pre.sys.b).reshaped({std::size_t{8}, std::size_t{1}}),
            rhs_ref) < 1e-10);
}

TEST_CASE("preconditioned operator is nearly symmetric when P is good") {
  // || M - M^T ||_F^2 <= 2 G_lambda(P) for M = P^T A.
  NormalRng rng(23);
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  const double lambda = 1e-2;
  MALSConfig cfg;
  cfg.lambda = lambda;
  cfg.eps = 1e-7;
  cfg.max_sweeps = 25;
  cfg.seed = 29;
  MALSResult pinv = mals_pinv(a, cfg);

  DenseTensor m = naive_matmul(transposed(tt_to_dense(pinv.p)), tt_to_dense(a));
  DenseTensor asym = m;
  DenseTensor mt = transposed(m);
  for (std::size_t i = 0; i < asym.size(); ++i) asym[i] -= mt[i];
  BoundReport rep = oracle_checks(tt_to_dense(a), tt_to_dense(pinv.p), lambda);
  CHECK(fro_norm(asym) * fro_norm(asym) <= 2.0 * rep.g_lambda + 1e-8);
}

TEST_CASE("rectangular operators become square solvable systems") {
  // Full-column-rank circulant stack: P^T A x = P^T b has the consistent
  // system's unique solution.
  TTMatrix a = gen_circulant_prescribed(4, 0.7);
  std::vector<std::size_t> col_modes(5, 2);
  col_modes[4] = 1;
  NormalRng rng(43);
  TTVector x_true = tt_random(col_modes, std::vector<std::size_t>{2, 2, 2, 1}, rng);
  TTVector b = tt_round(tt_matvec(a, x_true), 1e-14);

  MALSConfig pcfg;
  pcfg.lambda = 1e-6;
  pcfg.eps = 1e-6;
  pcfg.max_rank = 30;
  pcfg.max_sweeps = 10;
  MALSResult pinv = mals_pinv(a, pcfg);

  PrecondSystem pre = build_preconditioned_system(a, pinv.p, b, 1e-10);
  CHECK(pre.sys.m.row_sizes() == pre.sys.m.col_sizes());

  LinsolveConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_rank = 30;
  cfg.max_sweeps = 20;
  LinsolveResult res = mals_linsolve(pre.sys, cfg);
  CHECK(res.converged);
  CHECK(rel_fro_diff(tt_to_dense(res.x), tt_to_dense(x_true)) < 1e-5);
}

TEST_CASE("std_mals_pinv: identity recovers the identity") {
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix eye = TTMatrix::identity(modes);
  MALSConfig cfg;
  cfg.lambda = 0.0;
  cfg.eps = 1e-9;
  cfg.max_sweeps = 8;
  MALSResult res = std_mals_pinv(eye, cfg);
  CHECK(rel_fro_diff(tt_to_dense(res.p), tt_to_dense(eye)) < 1e-7);
}

TEST_CASE("std_mals operator densifies to I (x) AA^T + lambda I") {
  NormalRng rng(31);
  std::vector<std::size_t> modes{2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2}, rng);
  const double lambda = 0.3;
  TTMatrix g = std_mals_operator(a, lambda);
  DenseTensor gd = tt_to_dense(g);
  DenseTensor ref = test_support::kron_iaat_interleaved(
      tt_to_dense(a), a.row_sizes(), a.col_sizes());
  for (std::size_t i = 0; i < ref.rows(); ++i) ref(i, i) += lambda;
  CHECK(rel_fro_diff(gd, ref) < 1e-11);
}

TEST_CASE("std_mals agrees with the proposed solver on the objective") {
  NormalRng rng(37);
  std::vector<std::size_t> modes{2, 2, 2};
  TTMatrix a = tt_random(modes, modes, std::vector<std::size_t>{2, 2}, rng);
  const double lambda = 0.1;

  MALSConfig cfg;
  cfg.lambda = lambda;
  cfg.eps = 1e-8;
  cfg.max_sweeps = 30;
  cfg.max_rank = 64;
  cfg.local_tol = 1e-12;
  MALSResult direct = mals_pinv(a, cfg);

  MALSConfig scfg = cfg;
  scfg.eps = 1e-10;  // residual tolerance of the linear system
  scfg.max_sweeps = 40;
  MALSResult baseline = std_mals_pinv(a, scfg);

  DenseOracle oracle = make_dense_oracle(a, lambda);
  const double f_min = oracle.f_min();
  const double f_direct = f_lambda_dense(oracle.a, tt_to_dense(direct.p), lambda);
  const double f_std = f_lambda_dense(oracle.a, tt_to_dense(baseline.p), lambda);
  CHECK(std::abs(f_direct - f_std) <= 1e-6 * std::max(f_min, 1.0));
}

TEST_CASE("shape mismatches are rejected") {
  std::vector<std::size_t> m3{2, 2, 2};
  std::vector<std::size_t> m2{2, 2};
  NormalRng rng(41);
  TTMatrix a = tt_random(m3, m3, std::vector<std::size_t>{2, 2}, rng);
  TTVector b = tt_random(m2, std::vector<std::size_t>{2}, rng);
  LinearSystemTT sys{a, b, false};
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);
}
