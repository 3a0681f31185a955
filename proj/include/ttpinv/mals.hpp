#pragma once

// Two-site alternating solver for the regularized pseudoinverse problem
//   min ||I_J - P^T A||_F^2 + lambda ||P||_F^2  over bounded-rank trains.
//
// Each iteration solves one reduced local problem (A_bar + lambda I) p = b_bar
// at a pivot pair, splits the solution supercore with a truncated SVD, and
// advances the environments. The relative residual r = sqrt(F/J) is recorded
// at the local minimizer; the split is re-tried with a tighter tail budget
// whenever it would push F up by more than a rounding-level allowance, which
// keeps the recorded trace nonincreasing.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttpinv/krylov.hpp"
#include "ttpinv/tt.hpp"

namespace ttpinv {

struct MALSConfig {
  double lambda = 0.0;
  double eps = 1e-4;      // stopping tolerance on the residual decrease rate
  double delta = -1.0;    // truncation; < 0 selects 1e-6 (N-1)^{-1/2}
  std::size_t max_rank = 50;
  std::vector<std::size_t> rank_caps;  // per bond; overrides max_rank if set
  std::size_t max_sweeps = 50;
  KrylovMethod local_method = KrylovMethod::cg;
  double local_tol = 1e-8;
  std::size_t local_max_iters = 500;
  std::size_t local_restart = 30;
  std::uint64_t seed = 0;
  std::vector<std::size_t> init_ranks;  // default (1, 2, ..., 2, 1)

  double effective_delta(std::size_t n_sites) const;
  std::vector<std::size_t> effective_caps(std::size_t n_sites) const;
  void validate() const;
};

struct TraceRow {
  std::size_t sweep = 0;       // 1-based
  std::size_t iter = 0;        // 1-based, one per local solve
  std::size_t site = 0;        // 1-based pivot site n of the pair (n, n+1)
  double rel_residual = 0.0;
  std::size_t max_rank = 0;
  std::size_t local_iters = 0;
  double wall_ms = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;
  std::size_t sweeps = 0;
  bool converged = false;       // stopping rule satisfied
  bool hit_max_sweeps = false;
  std::size_t total_local_iters = 0;
  std::string stop_reason;
};

struct MALSResult {
  TTMatrix p;
  ConvergenceTrace trace;
};

// Random start per the sweep discipline: i.i.d. standard normal cores with
// sites 3..N (1-based) right-orthogonalized; deterministic in the seed.
TTMatrix init_guess(std::span<const std::size_t> row_sizes,
                    std::span<const std::size_t> col_sizes,
                    std::span<const std::size_t> init_ranks, std::uint64_t seed);

// Stopping rule on squared residual history: decrease over the trailing
// half-sweep window below eps^2 relative.
bool stopping_check(std::span<const double> r2_history, double eps,
                    std::size_t n_sites);

// F_lambda and r_lambda evaluated from full TT contractions
// (||I - P^T A||_F^2 + lambda ||P||_F^2); robust at small residuals.
double f_lambda_direct(const TTMatrix& a, const TTMatrix& p, double lambda);
double relative_residual_direct(const TTMatrix& a, const TTMatrix& p,
                                double lambda);

struct ObjectiveReport {
  double f_lambda = 0.0;
  double r_lambda = 0.0;
  std::optional<double> f_min;
  std::optional<double> g_lambda;
};

// F/r from TT contractions; F_min per the singular-value formula when a
// spectrum is supplied or the operator is small enough to densify.
ObjectiveReport objective_report(const TTMatrix& a, const TTMatrix& p,
                                 double lambda,
                                 std::span<const double> singular_values = {});

MALSResult mals_pinv(const TTMatrix& a, const MALSConfig& cfg);

}  // namespace ttpinv
