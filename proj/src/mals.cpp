#include "ttpinv/mals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ttpinv/env.hpp"
#include "ttpinv/kernels.hpp"
#include "ttpinv/lapack.hpp"
#include "ttpinv/oracle.hpp"

namespace ttpinv {

namespace {

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

double col_count(const TTMatrix& a) {
  double j = 1.0;
  for (std::size_t n = 0; n < a.order(); ++n)
    j *= static_cast<double>(a.col_size(n));
  return j;
}

// F_lambda at a supercore through the reduced quadratic. The value is exact
// up to cancellation against J; `error_scale` estimates that floor so callers
// can tell when the indirect route has run out of digits.
struct LocalObjective {
  double f = 0.0;
  double error_scale = 0.0;
};

LocalObjective local_objective(const LocalProblem& lp, std::span<const double> x,
                               double j_total) {
  std::vector<double> ax = lp.apply(x);
  const std::size_t n = x.size();
  const double quad = kernels::dot(n, x.data(), ax.data());
  const double lin = kernels::dot(n, lp.rhs().data(), x.data());
  const double sq = kernels::nrm2sq(n, x.data());
  const double ax_sq = kernels::nrm2sq(n, ax.data());
  LocalObjective out;
  out.f = j_total + quad - 2.0 * lin + lp.lambda() * sq;
  out.error_scale =
      std::numeric_limits<double>::epsilon() *
      (j_total + std::abs(quad) + 2.0 * std::abs(lin) + lp.lambda() * sq +
       std::sqrt(sq * ax_sq));
  return out;
}

struct PivotPlan {
  std::vector<std::size_t> forward;   // pivots of the forward half sweep
  std::vector<std::size_t> backward;  // pivots of the backward half sweep
};

PivotPlan pivot_plan(std::size_t n_sites) {
  PivotPlan plan;
  if (n_sites == 2) {
    plan.forward = {0};
    plan.backward = {0};
    return plan;
  }
  for (std::size_t p = 0; p + 2 < n_sites; ++p) plan.forward.push_back(p);
  for (std::size_t p = n_sites - 2; p >= 1; --p) plan.backward.push_back(p);
  return plan;
}

}  // namespace

double MALSConfig::effective_delta(std::size_t n_sites) const {
  if (delta >= 0.0) return delta;
  return 1e-6 / std::sqrt(static_cast<double>(std::max<std::size_t>(n_sites - 1, 1)));
}

std::vector<std::size_t> MALSConfig::effective_caps(std::size_t n_sites) const {
  if (!rank_caps.empty()) {
    if (rank_caps.size() != n_sites - 1)
      throw std::invalid_argument("MALSConfig: expected " +
                                  std::to_string(n_sites - 1) + " rank caps");
    for (std::size_t cap : rank_caps)
      if (cap < 1) throw std::invalid_argument("MALSConfig: rank caps must be >= 1");
    return rank_caps;
  }
  if (max_rank < 1)
    throw std::invalid_argument("MALSConfig: max_rank must be >= 1");
  return std::vector<std::size_t>(n_sites - 1, max_rank);
}

void MALSConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("MALSConfig: lambda must be >= 0");
  if (eps <= 0.0) throw std::invalid_argument("MALSConfig: eps must be > 0");
  if (local_tol <= 0.0)
    throw std::invalid_argument("MALSConfig: local_tol must be > 0");
}

TTMatrix init_guess(std::span<const std::size_t> row_sizes,
                    std::span<const std::size_t> col_sizes,
                    std::span<const std::size_t> init_ranks,
                    std::uint64_t seed) {
  const std::size_t n_sites = row_sizes.size();
  if (n_sites < 2) throw std::invalid_argument("init_guess: need at least 2 sites");
  std::vector<std::size_t> ranks(init_ranks.begin(), init_ranks.end());
  if (ranks.empty()) ranks.assign(n_sites - 1, 2);
  if (ranks.size() != n_sites - 1)
    throw std::invalid_argument("init_guess: expected " +
                                std::to_string(n_sites - 1) + " initial ranks");
  NormalRng rng(seed);
  TTMatrix p = tt_random(row_sizes, col_sizes, ranks, rng);
  return orthogonalized(std::move(p), 0);  // sites 3..N right-orthogonal
}

bool stopping_check(std::span<const double> r2_history, double eps,
                    std::size_t n_sites) {
  const std::size_t window = std::max<std::size_t>(n_sites - 2, 1);
  if (r2_history.size() < window + 1) return false;
  const double prev = r2_history[r2_history.size() - 1 - window];
  const double cur = r2_history.back();
  return prev - cur < eps * eps * prev;
}

double f_lambda_direct(const TTMatrix& a, const TTMatrix& p, double lambda) {
  TTMatrix pta = tt_matmat(tt_transpose(p), a);
  std::vector<std::size_t> jm = a.col_sizes();
  TTMatrix e = tt_axpby(1.0, TTMatrix::identity(jm), -1.0, pta);
  const double en = tt_norm(e);
  double f = en * en;
  if (lambda > 0.0) {
    const double pn = tt_norm(p);
    f += lambda * pn * pn;
  }
  return f;
}

double relative_residual_direct(const TTMatrix& a, const TTMatrix& p,
                                double lambda) {
  return std::sqrt(std::max(f_lambda_direct(a, p, lambda), 0.0) / col_count(a));
}

ObjectiveReport objective_report(const TTMatrix& a, const TTMatrix& p,
                                 double lambda,
                                 std::span<const double> singular_values) {
  ObjectiveReport rep;
  rep.f_lambda = f_lambda_direct(a, p, lambda);
  rep.r_lambda = std::sqrt(std::max(rep.f_lambda, 0.0) / col_count(a));
  std::vector<double> sigma(singular_values.begin(), singular_values.end());
  if (sigma.empty() && a.dense_fits())
    sigma = la::singular_values(tt_to_dense(a));
  if (!sigma.empty()) {
    rep.f_min = f_min_from_sigma(sigma, lambda, col_count(a));
    rep.g_lambda = rep.f_lambda - *rep.f_min;
  }
  return rep;
}

MALSResult mals_pinv(const TTMatrix& a, const MALSConfig& cfg) {
  cfg.validate();
  const std::size_t n_sites = a.order();
  if (n_sites < 2)
    throw std::invalid_argument("mals_pinv: need at least two sites");
  if (a.log2_rows() < a.log2_cols() - 1e-9)
    throw std::invalid_argument(
        "mals_pinv: operator has more columns than rows; pass the transpose");
  for (std::size_t n = 0; n < n_sites; ++n)
    for (double v : a.core(n).values())
      if (!std::isfinite(v))
        throw std::invalid_argument("mals_pinv: non-finite operator core " +
                                    std::to_string(n));

  const double j_total = col_count(a);
  const double delta = cfg.effective_delta(n_sites);
  const std::vector<std::size_t> caps = cfg.effective_caps(n_sites);

  TTMatrix p = init_guess(a.row_sizes(), a.col_sizes(), cfg.init_ranks, cfg.seed);

  EnvBlocks env = EnvBlocks::boundaries(n_sites);
  for (std::size_t m = n_sites - 1; m >= 2; --m) {
    env.update_right(m, p.core(m), a.core(m));
    if (m == 2) break;
  }

  KrylovConfig kcfg;
  kcfg.method = cfg.local_method;
  kcfg.tol = cfg.local_tol;
  kcfg.max_iters = cfg.local_max_iters;
  kcfg.restart = cfg.local_restart;

  const PivotPlan plan = pivot_plan(n_sites);
  MALSResult out{std::move(p), {}};
  ConvergenceTrace& trace = out.trace;
  std::vector<double> r2_hist;
  std::size_t iter = 0;
  bool stop = false;
  // Latched when the reduced quadratic runs out of digits; residuals are
  // then recomputed from full TT contractions.
  bool direct_mode = false;

  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps && !stop; ++sweep) {
    trace.sweeps = sweep;
    for (int half = 0; half < 2 && !stop; ++half) {
      const auto& pivots = half == 0 ? plan.forward : plan.backward;
      const bool forward = half == 0;
      for (std::size_t pv : pivots) {
        const auto t0 = std::chrono::steady_clock::now();

        LocalProblem lp(env.l1[pv], env.r1[pv + 2], env.l2[pv], env.r2[pv + 2],
                        a.core(pv), a.core(pv + 1), cfg.lambda, pv);
        SuperCore warm = merge_cores(out.p, pv);
        std::span<const double> w(warm.t.values());

        const LinOp op = [&lp, &cfg](std::span<const double> x,
                                     std::span<double> y) {
          std::vector<double> ax = lp.apply(x);
          for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = ax[i] + cfg.lambda * x[i];
        };
        KrylovResult sol = krylov_solve(op, lp.rhs(), kcfg, w);

        // The split below never worsens F beyond this allowance, and the
        // solve itself is rejected if it does (possible under GMRES).
        LocalObjective warm_obj = local_objective(lp, w, j_total);
        LocalObjective obj = local_objective(lp, sol.x, j_total);
        if (!(obj.f <= warm_obj.f)) {
          sol.x.assign(w.begin(), w.end());
          obj = warm_obj;
        }
        double f = std::max(obj.f, 0.0);
        double r = std::sqrt(f / j_total);

        // Supercore of the accepted local solution.
        SuperCore sc{DenseTensor(warm.t.shape(), std::move(sol.x)), pv};

        if (r < 1e-6 || f < 1e4 * obj.error_scale) direct_mode = true;
        if (direct_mode) {
          // Indirect values lose precision near machine epsilon; recompute
          // from full TT contractions.
          TTMatrix probe = out.p;
          SplitResult lossless =
              split_supercore(sc, 0.0, 0,
                              forward ? SplitDirection::left_orthogonal
                                      : SplitDirection::right_orthogonal);
          const auto rs = probe.row_sizes();
          const auto cs = probe.col_sizes();
          probe.set_pair(pv,
                         lossless.left.reshaped({lossless.left.dim(0), rs[pv],
                                                 cs[pv], lossless.left.dim(2)}),
                         lossless.right.reshaped({lossless.right.dim(0),
                                                  rs[pv + 1], cs[pv + 1],
                                                  lossless.right.dim(2)}),
                         forward ? Ortho::left : Ortho::none,
                         forward ? Ortho::none : Ortho::right);
          r = relative_residual_direct(a, probe, cfg.lambda);
          f = r * r * j_total;
        }

        // Truncated split with a retry guard: tighten the tail budget until
        // the post-split objective stays within a rounding-level allowance.
        // Both sides of the comparison use the reduced quadratic so its
        // cancellation error drops out of the difference.
        const double f_guard = std::max(obj.f, 0.0);
        const double x_norm =
            std::sqrt(kernels::nrm2sq(sc.t.size(), sc.t.data()));
        const double allowed =
            std::max({1e-13 * f, 1e-13 * f_guard, 1e-28 * j_total});
        double delta_eff = delta * x_norm;
        SplitResult split{};
        for (int attempt = 0; attempt < 8; ++attempt) {
          split = split_supercore(sc, delta_eff, caps[pv],
                                  forward ? SplitDirection::left_orthogonal
                                          : SplitDirection::right_orthogonal);
          if (split.discarded_norm == 0.0) break;
          DenseTensor merged = mode1_contract(split.left, split.right);
          const double f_post =
              local_objective(lp, std::span<const double>(merged.values()),
                              j_total)
                  .f;
          if (f_post - f_guard <= allowed) break;
          delta_eff /= 16.0;
        }

        const auto rs = out.p.row_sizes();
        const auto cs = out.p.col_sizes();
        out.p.set_pair(pv,
                       split.left.reshaped({split.left.dim(0), rs[pv], cs[pv],
                                            split.left.dim(2)}),
                       split.right.reshaped({split.right.dim(0), rs[pv + 1],
                                             cs[pv + 1], split.right.dim(2)}),
                       forward ? Ortho::left : Ortho::none,
                       forward ? Ortho::none : Ortho::right);

        if (n_sites > 2) {
          if (forward) {
            env.update_left(pv, out.p.core(pv), a.core(pv));
          } else {
            env.update_right(pv + 1, out.p.core(pv + 1), a.core(pv + 1));
          }
        }

        ++iter;
        trace.total_local_iters += sol.iters;
        r2_hist.push_back(r * r);
        trace.rows.push_back(TraceRow{sweep, iter, pv + 1, r,
                                      out.p.max_rank(), sol.iters,
                                      wall_ms_since(t0)});
      }
      if (stopping_check(r2_hist, cfg.eps, n_sites)) {
        trace.converged = true;
        trace.stop_reason = "residual decrease below eps";
        stop = true;
      }
    }
  }
  if (!stop) {
    trace.hit_max_sweeps = true;
    trace.stop_reason = "max sweeps reached";
  }
  return out;
}

}  // namespace ttpinv
