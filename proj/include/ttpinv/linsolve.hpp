#pragma once

// Square-system TT solver with the same two-site sweep structure as the
// pseudoinverse solver; local problems are Galerkin projections of the
// operator onto the solution's frame. Also the preconditioning pipeline
// P^T A x = P^T b and the standard one-big-system baseline.

#include <cstdint>
#include <optional>
#include <vector>

#include "ttpinv/krylov.hpp"
#include "ttpinv/mals.hpp"
#include "ttpinv/tt.hpp"

namespace ttpinv {

struct LinearSystemTT {
  TTMatrix m;
  TTVector b;
  bool symmetric_positive = false;

  void validate() const;
};

struct LinsolveConfig {
  double tol = 1e-6;    // on ||M x - b|| / ||b||
  double delta = -1.0;  // truncation; < 0 selects 1e-6 (N-1)^{-1/2}
  std::size_t max_rank = 50;
  std::vector<std::size_t> rank_caps;
  std::size_t max_sweeps = 50;
  KrylovMethod local_method = KrylovMethod::gmres;
  double local_tol = 1e-10;
  std::size_t local_max_iters = 400;
  std::size_t local_restart = 40;
  std::uint64_t seed = 0;
  std::vector<std::size_t> init_ranks;
};

struct LinsolveResult {
  TTVector x;
  ConvergenceTrace trace;
  double rel_residual = 0.0;
  bool converged = false;
};

LinsolveResult mals_linsolve(const LinearSystemTT& sys, const LinsolveConfig& cfg);

struct PrecondSystem {
  LinearSystemTT sys;
  std::vector<std::size_t> op_ranks_before, op_ranks_after;
  std::vector<std::size_t> rhs_ranks_before, rhs_ranks_after;
};

// M = round(P^T A), rhs = round(P^T b); delta_round < 0 selects 1e-8.
PrecondSystem build_preconditioned_system(const TTMatrix& a, const TTMatrix& p,
                                          const TTVector& b,
                                          double delta_round = -1.0);

// Baseline: solve (I (x) A A^T + lambda I) vec(P) = vec(A) with the linear
// solver over the fused row-column modes.
MALSResult std_mals_pinv(const TTMatrix& a, const MALSConfig& cfg);

// Operator of the baseline system (exposed for tests).
TTMatrix std_mals_operator(const TTMatrix& a, double lambda);

}  // namespace ttpinv
