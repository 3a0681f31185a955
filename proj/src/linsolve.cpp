#include "ttpinv/linsolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ttpinv/kernels.hpp"
#include "ttpinv/lapack.hpp"

namespace ttpinv {

namespace {

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

// Environments over (bra x, M, ket x) and (bra x, b) for the Galerkin
// local systems, plus (x, M, M, x) and (x, M, b) chains backing the
// residual-minimizing local systems used when a Galerkin step would raise
// the true residual.
struct GalerkinEnv {
  std::vector<DenseTensor> lop, rop;  // (rx, rM, rx)
  std::vector<DenseTensor> lb, rb;    // (rx, rb)
  std::vector<DenseTensor> lnn, rnn;  // (rx, rM, rM, rx), normal operator
  std::vector<DenseTensor> lnb, rnb;  // (rx, rM, rb), normal rhs

  static GalerkinEnv boundaries(std::size_t n_sites) {
    GalerkinEnv env;
    env.lop.resize(n_sites + 1);
    env.rop.resize(n_sites + 1);
    env.lb.resize(n_sites + 1);
    env.rb.resize(n_sites + 1);
    env.lnn.resize(n_sites + 1);
    env.rnn.resize(n_sites + 1);
    env.lnb.resize(n_sites + 1);
    env.rnb.resize(n_sites + 1);
    DenseTensor one4({1, 1, 1, 1});
    one4[0] = 1.0;
    DenseTensor one3({1, 1, 1});
    one3[0] = 1.0;
    DenseTensor one2({1, 1});
    one2[0] = 1.0;
    env.lop[0] = one3;
    env.rop[n_sites] = one3;
    env.lb[0] = one2;
    env.rb[n_sites] = one2;
    env.lnn[0] = one4;
    env.rnn[n_sites] = one4;
    env.lnb[0] = one3;
    env.rnb[n_sites] = one3;
    return env;
  }

  void update_left(std::size_t m, const DenseTensor& x_core,
                   const DenseTensor& m_core, const DenseTensor& b_core) {
    DenseTensor u = contract(lop[m], {0}, x_core, {0});  // (s, r, k, tau)
    u = contract(u, {0, 2}, m_core, {0, 1});             // (r, tau, k', sigma)
    lop[m + 1] = contract(u, {0, 2}, x_core, {0, 1});    // (tau, sigma, rho)
    DenseTensor v = contract(lb[m], {0}, x_core, {0});   // (rb, k, tau)
    lb[m + 1] = contract(v, {0, 1}, b_core, {0, 1});     // (tau, beta)

    // (x, M, M, x): both operator copies share the row index.
    DenseTensor c = contract(lnn[m], {0}, x_core, {0});  // (s, s2, r, k, tau)
    c = contract(c, {0, 3}, m_core, {0, 2});             // (s2, r, tau, u, sigma)
    c = contract(c, {0, 3}, m_core, {0, 1});             // (r, tau, sigma, k', sigma2)
    lnn[m + 1] = contract(c, {0, 3}, x_core, {0, 1});    // (tau, sigma, sigma2, rho)

    // (x, M, b): M's column pairs the solution chain, its row pairs b.
    DenseTensor e = contract(lnb[m], {0}, x_core, {0});  // (s, b0, k, tau)
    e = contract(e, {0, 2}, m_core, {0, 2});             // (b0, tau, u, sigma)
    lnb[m + 1] = contract(e, {0, 2}, b_core, {0, 1});    // (tau, sigma, beta)
  }

  void update_right(std::size_t m, const DenseTensor& x_core,
                    const DenseTensor& m_core, const DenseTensor& b_core) {
    DenseTensor w = contract(x_core, {2}, rop[m + 1], {0});  // (t, k, sigma, rho)
    w = contract(w, {1, 2}, m_core, {1, 3});                 // (t, rho, s, k')
    rop[m] = contract(w, {3, 1}, x_core, {1, 2});            // (t, s, r)
    DenseTensor v = contract(x_core, {2}, rb[m + 1], {0});   // (t, k, beta)
    rb[m] = contract(v, {1, 2}, b_core, {1, 2});             // (t, rb)

    DenseTensor d = contract(x_core, {2}, rnn[m + 1], {0});  // (t, k, s, s2, r)
    d = contract(d, {1, 2}, m_core, {2, 3});                 // (t, s2, r, s, u)
    d = contract(d, {4, 1}, m_core, {1, 3});                 // (t, r, s, s2, k')
    rnn[m] = contract(d, {4, 1}, x_core, {1, 2});            // (t, s, s2, r)

    DenseTensor f = contract(x_core, {2}, rnb[m + 1], {0});  // (t, k, sigma, beta)
    f = contract(f, {1, 2}, m_core, {2, 3});                 // (t, beta, s, u)
    rnb[m] = contract(f, {3, 1}, b_core, {1, 2});            // (t, s, b0)
  }
};

// Residual-minimizing local system over the current frame: the operator is
// frame^T M^T M frame and the rhs frame^T M^T b, so its CG iterates are
// monotone in the true residual ||M x - b||.
struct NormalLocal {
  const DenseTensor* l;        // (t, s, s2, r)
  const DenseTensor* r;
  const DenseTensor* m_left;   // (s, u, k, sm)
  const DenseTensor* m_right;
  std::vector<std::size_t> x_shape;
  std::size_t dim;

  NormalLocal(const DenseTensor& lnn, const DenseTensor& rnn,
              const DenseTensor& ml, const DenseTensor& mr)
      : l(&lnn), r(&rnn), m_left(&ml), m_right(&mr) {
    x_shape = {lnn.dim(3), ml.dim(2), mr.dim(2), rnn.dim(3)};
    dim = x_shape[0] * x_shape[1] * x_shape[2] * x_shape[3];
  }

  std::vector<double> apply(std::span<const double> y) const {
    DenseTensor yt(x_shape, std::vector<double>(y.begin(), y.end()));
    DenseTensor t = contract(*l, {3}, yt, {0});   // (t1, s, s2, k1', k2', r2)
    t = contract(t, {2, 3}, *m_left, {0, 2});     // (t1, s, k2', r2, u1, sm2)
    t = contract(t, {1, 4}, *m_left, {0, 1});     // (t1, k2', r2, sm2, k1, sm)
    t = contract(t, {3, 1}, *m_right, {0, 2});    // (t1, r2, k1, sm, u2, s22)
    t = contract(t, {3, 4}, *m_right, {0, 1});    // (t1, r2, k1, s22, k2, s2)
    t = contract(t, {1, 5, 3}, *r, {3, 1, 2});    // (t1, k1, k2, t2)
    return std::move(t.values());
  }

  std::vector<double> rhs(const DenseTensor& lnb, const DenseTensor& rnb,
                          const DenseTensor& m_l, const DenseTensor& m_r,
                          const DenseTensor& b_left,
                          const DenseTensor& b_right) const {
    DenseTensor g = contract(lnb, {1}, m_l, {0});   // (t1, b0, u1, k1, sm)
    g = contract(g, {1, 2}, b_left, {0, 1});        // (t1, k1, sm, b)
    g = contract(g, {2}, m_r, {0});                 // (t1, k1, b, u2, k2, s2)
    g = contract(g, {2, 3}, b_right, {0, 1});       // (t1, k1, k2, s2, b1)
    g = contract(g, {3, 4}, rnb, {1, 2});           // (t1, k1, k2, t2)
    return std::move(g.values());
  }
};

struct GalerkinLocal {
  const DenseTensor* l;
  const DenseTensor* r;
  const DenseTensor* m_left;
  const DenseTensor* m_right;
  std::vector<std::size_t> x_shape;
  std::size_t dim;

  GalerkinLocal(const DenseTensor& lop, const DenseTensor& rop,
                const DenseTensor& ml, const DenseTensor& mr)
      : l(&lop), r(&rop), m_left(&ml), m_right(&mr) {
    x_shape = {lop.dim(2), ml.dim(2), mr.dim(2), rop.dim(2)};
    dim = x_shape[0] * x_shape[1] * x_shape[2] * x_shape[3];
  }

  // y = (frame^T M frame) x
  std::vector<double> apply(std::span<const double> x) const {
    DenseTensor xt(x_shape, std::vector<double>(x.begin(), x.end()));
    DenseTensor t = contract(*l, {2}, xt, {0});       // (t1, s, k1', k2', r2)
    t = contract(t, {1, 2}, *m_left, {0, 2});         // (t1, k2', r2, k1, sm)
    t = contract(t, {4, 1}, *m_right, {0, 2});        // (t1, r2, k1, k2, s2)
    t = contract(t, {1, 4}, *r, {2, 1});              // (t1, k1, k2, t2)
    return std::move(t.values());
  }

  std::vector<double> rhs(const DenseTensor& lb, const DenseTensor& rb,
                          const DenseTensor& b_left,
                          const DenseTensor& b_right) const {
    DenseTensor t = contract(lb, {1}, b_left, {0});   // (t1, k1, beta)
    t = contract(t, {2}, b_right, {0});               // (t1, k1, k2, beta1)
    t = contract(t, {3}, rb, {1});                    // (t1, k1, k2, t2)
    return std::move(t.values());
  }
};

double true_residual(const TTMatrix& m, const TTVector& x, const TTVector& b,
                     double b_norm) {
  TTVector e = tt_axpby(1.0, tt_matvec(m, x), -1.0, b);
  return tt_norm(e) / b_norm;
}

struct PivotPlanL {
  std::vector<std::size_t> forward, backward;
};

PivotPlanL pivot_plan(std::size_t n_sites) {
  PivotPlanL plan;
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

void LinearSystemTT::validate() const {
  if (m.order() != b.order() || m.row_sizes() != b.mode_sizes())
    throw std::invalid_argument("LinearSystemTT: operator rows " +
                                shape_str(m.row_sizes()) +
                                " do not match rhs modes " +
                                shape_str(b.mode_sizes()));
  if (m.row_sizes() != m.col_sizes())
    throw std::invalid_argument("LinearSystemTT: operator is not square");
}

LinsolveResult mals_linsolve(const LinearSystemTT& sys,
                             const LinsolveConfig& cfg) {
  sys.validate();
  if (cfg.tol <= 0.0)
    throw std::invalid_argument("mals_linsolve: tol must be > 0");
  const std::size_t n_sites = sys.m.order();
  if (n_sites < 2)
    throw std::invalid_argument("mals_linsolve: need at least two sites");

  const double b_norm = tt_norm(sys.b);
  LinsolveResult out;
  if (b_norm == 0.0) {
    out.x = TTVector::zeros(sys.b.mode_sizes());
    out.converged = true;
    out.trace.stop_reason = "zero right-hand side";
    return out;
  }

  const double delta =
      cfg.delta >= 0.0
          ? cfg.delta
          : 1e-6 / std::sqrt(static_cast<double>(n_sites - 1));
  std::vector<std::size_t> caps = cfg.rank_caps;
  if (caps.empty()) caps.assign(n_sites - 1, cfg.max_rank);
  if (caps.size() != n_sites - 1)
    throw std::invalid_argument("mals_linsolve: expected " +
                                std::to_string(n_sites - 1) + " rank caps");

  std::vector<std::size_t> init_ranks = cfg.init_ranks;
  if (init_ranks.empty()) init_ranks.assign(n_sites - 1, 2);
  NormalRng rng(cfg.seed);
  TTVector x = tt_random(sys.b.mode_sizes(), init_ranks, rng);
  x = orthogonalized(std::move(x), 0);

  GalerkinEnv env = GalerkinEnv::boundaries(n_sites);
  for (std::size_t m = n_sites - 1; m >= 2; --m) {
    env.update_right(m, x.core(m), sys.m.core(m), sys.b.core(m));
    if (m == 2) break;
  }

  KrylovConfig kcfg;
  kcfg.method = sys.symmetric_positive ? KrylovMethod::cg : cfg.local_method;
  kcfg.tol = cfg.local_tol;
  kcfg.max_iters = cfg.local_max_iters;
  kcfg.restart = cfg.local_restart;

  const PivotPlanL plan = pivot_plan(n_sites);
  double r_cur = true_residual(sys.m, x, sys.b, b_norm);
  std::size_t iter = 0;
  bool stop = false;

  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps && !stop; ++sweep) {
    out.trace.sweeps = sweep;
    for (int half = 0; half < 2 && !stop; ++half) {
      const bool forward = half == 0;
      const auto& pivots = forward ? plan.forward : plan.backward;
      for (std::size_t pv : pivots) {
        const auto t0 = std::chrono::steady_clock::now();
        GalerkinLocal loc(env.lop[pv], env.rop[pv + 2], sys.m.core(pv),
                          sys.m.core(pv + 1));
        std::vector<double> rhs =
            loc.rhs(env.lb[pv], env.rb[pv + 2], sys.b.core(pv),
                    sys.b.core(pv + 1));
        SuperCore warm = merge_cores(x, pv);
        const SplitDirection dir = forward ? SplitDirection::left_orthogonal
                                           : SplitDirection::right_orthogonal;
        const Ortho fl = forward ? Ortho::left : Ortho::none;
        const Ortho fr = forward ? Ortho::none : Ortho::right;

        const LinOp op = [&loc](std::span<const double> v, std::span<double> y) {
          std::vector<double> av = loc.apply(v);
          std::copy(av.begin(), av.end(), y.begin());
        };
        KrylovResult sol = krylov_solve(op, rhs, kcfg,
                                        std::span<const double>(warm.t.values()));
        std::size_t local_iters = sol.iters;

        auto try_candidate = [&](std::vector<double> values) {
          SuperCore sc{DenseTensor(warm.t.shape(), std::move(values)), pv};
          const double sc_norm =
              std::sqrt(kernels::nrm2sq(sc.t.size(), sc.t.data()));
          SplitResult split = split_supercore(sc, delta * sc_norm, caps[pv], dir);
          TTVector candidate = x;
          candidate.set_pair(pv, split.left, split.right, fl, fr);
          const double r_new = true_residual(sys.m, candidate, sys.b, b_norm);
          return std::pair<TTVector, double>{std::move(candidate), r_new};
        };

        auto [candidate, r_new] = try_candidate(std::move(sol.x));
        const double accept_slack = 1e-13 * std::max(r_cur, 1.0);

        if (r_new > r_cur + accept_slack) {
          // The Galerkin step is energy-optimal, not residual-optimal; when
          // it would raise the true residual, re-solve the local problem as
          // the residual minimization over the same frame (SPD, warm-started
          // CG, monotone in ||M x - b|| by construction).
          NormalLocal nloc(env.lnn[pv], env.rnn[pv + 2], sys.m.core(pv),
                           sys.m.core(pv + 1));
          std::vector<double> nrhs =
              nloc.rhs(env.lnb[pv], env.rnb[pv + 2], sys.m.core(pv),
                       sys.m.core(pv + 1), sys.b.core(pv), sys.b.core(pv + 1));
          const LinOp nop = [&nloc](std::span<const double> v,
                                    std::span<double> y) {
            std::vector<double> av = nloc.apply(v);
            std::copy(av.begin(), av.end(), y.begin());
          };
          KrylovConfig ncfg = kcfg;
          ncfg.method = KrylovMethod::cg;
          KrylovResult nsol = krylov_solve(nop, nrhs, ncfg,
                                           std::span<const double>(warm.t.values()));
          local_iters += nsol.iters;
          std::tie(candidate, r_new) = try_candidate(std::move(nsol.x));
        }

        if (r_new <= r_cur + accept_slack) {
          x = std::move(candidate);
          r_cur = r_new;
        } else {
          // Keep the incumbent supercore; re-split it near-losslessly to
          // preserve the sweep's orthogonality discipline.
          const double w_norm =
              std::sqrt(kernels::nrm2sq(warm.t.size(), warm.t.data()));
          SplitResult keep = split_supercore(warm, 1e-14 * w_norm, 0, dir);
          x.set_pair(pv, keep.left, keep.right, fl, fr);
          r_cur = true_residual(sys.m, x, sys.b, b_norm);
        }

        if (n_sites > 2) {
          if (forward) {
            env.update_left(pv, x.core(pv), sys.m.core(pv), sys.b.core(pv));
          } else {
            env.update_right(pv + 1, x.core(pv + 1), sys.m.core(pv + 1),
                             sys.b.core(pv + 1));
          }
        }

        ++iter;
        out.trace.total_local_iters += local_iters;
        out.trace.rows.push_back(TraceRow{sweep, iter, pv + 1, r_cur,
                                          x.max_rank(), local_iters,
                                          wall_ms_since(t0)});
        if (r_cur <= cfg.tol) {
          out.converged = true;
          out.trace.converged = true;
          out.trace.stop_reason = "residual below tol";
          stop = true;
          break;
        }
      }
    }
  }
  if (!stop) {
    out.trace.hit_max_sweeps = true;
    out.trace.stop_reason = "max sweeps reached";
  }
  out.x = std::move(x);
  out.rel_residual = r_cur;
  return out;
}

PrecondSystem build_preconditioned_system(const TTMatrix& a, const TTMatrix& p,
                                          const TTVector& b,
                                          double delta_round) {
  if (a.row_sizes() != p.row_sizes() || a.col_sizes() != p.col_sizes())
    throw std::invalid_argument(
        "build_preconditioned_system: P must have the shape of A (" +
        shape_str(a.row_sizes()) + " x " + shape_str(a.col_sizes()) + ")");
  if (a.row_sizes() != b.mode_sizes())
    throw std::invalid_argument(
        "build_preconditioned_system: rhs modes " + shape_str(b.mode_sizes()) +
        " do not match operator rows " + shape_str(a.row_sizes()));
  const double delta = delta_round >= 0.0 ? delta_round : 1e-8;

  PrecondSystem out;
  TTMatrix pt = tt_transpose(p);
  TTMatrix m = tt_matmat(pt, a);
  out.op_ranks_before = m.ranks();
  m = tt_round(m, delta);
  out.op_ranks_after = m.ranks();

  TTVector rhs = tt_matvec(pt, b);
  out.rhs_ranks_before = rhs.ranks();
  rhs = tt_round(rhs, delta);
  out.rhs_ranks_after = rhs.ranks();

  out.sys = LinearSystemTT{std::move(m), std::move(rhs), false};
  return out;
}

TTMatrix std_mals_operator(const TTMatrix& a, double lambda) {
  const std::size_t n_sites = a.order();
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    const DenseTensor& c = a.core(n);
    const std::size_t ra = c.dim(0), i = c.dim(1), j = c.dim(2), rb = c.dim(3);
    // AA^T site block: (s, i, s2, st, i2, st2) -> ((s,st), i, i2, (s2,st2))
    DenseTensor aa = contract(c, {2}, c, {2});
    aa = permute(aa, {0, 3, 1, 4, 2, 5}).reshaped({ra * ra, i, i, rb * rb});
    // Embed delta_{j,j'}: core over K = (i, j) pairs.
    DenseTensor g({ra * ra, i, j, i, j, rb * rb});
    for (std::size_t jj = 0; jj < j; ++jj)
      for (std::size_t s2 = 0; s2 < rb * rb; ++s2)
        for (std::size_t i2 = 0; i2 < i; ++i2)
          for (std::size_t i1 = 0; i1 < i; ++i1)
            for (std::size_t s1 = 0; s1 < ra * ra; ++s1)
              g(s1, i1, jj, i2, jj, s2) = aa(s1, i1, i2, s2);
    cores.push_back(
        std::move(g).reshaped({ra * ra, i * j, i * j, rb * rb}));
  }
  TTMatrix op(std::move(cores));
  if (lambda > 0.0) {
    std::vector<std::size_t> k_sizes(n_sites);
    for (std::size_t n = 0; n < n_sites; ++n)
      k_sizes[n] = a.row_size(n) * a.col_size(n);
    op = tt_axpby(1.0, op, lambda, TTMatrix::identity(k_sizes));
  }
  return op;
}

MALSResult std_mals_pinv(const TTMatrix& a, const MALSConfig& cfg) {
  const std::size_t n_sites = a.order();
  if (n_sites < 2)
    throw std::invalid_argument("std_mals_pinv: need at least two sites");
  if (a.log2_rows() < a.log2_cols() - 1e-9)
    throw std::invalid_argument(
        "std_mals_pinv: operator has more columns than rows; pass the transpose");

  LinearSystemTT sys;
  sys.m = std_mals_operator(a, cfg.lambda);
  sys.b = extended_vectorize(a);
  sys.symmetric_positive = true;

  LinsolveConfig lcfg;
  lcfg.tol = cfg.eps;
  lcfg.delta = cfg.delta;
  lcfg.max_rank = cfg.max_rank;
  lcfg.rank_caps = cfg.rank_caps;
  lcfg.max_sweeps = cfg.max_sweeps;
  lcfg.local_method = KrylovMethod::cg;
  lcfg.local_tol = cfg.local_tol;
  lcfg.local_max_iters = cfg.local_max_iters;
  lcfg.local_restart = cfg.local_restart;
  lcfg.seed = cfg.seed;
  lcfg.init_ranks = cfg.init_ranks;

  LinsolveResult sol = mals_linsolve(sys, lcfg);
  MALSResult out;
  out.p = matrix_from_extended(sol.x, a.row_sizes(), a.col_sizes());
  out.trace = std::move(sol.trace);
  return out;
}

}  // namespace ttpinv
