#include "ttpinv/krylov.hpp"

#include <cmath>
#include <stdexcept>

#include "ttpinv/kernels.hpp"

namespace ttpinv {

namespace {

using kernels::axpy;
using kernels::dot;
using kernels::nrm2sq;
using kernels::scal;

double nrm2(std::span<const double> v) {
  return std::sqrt(nrm2sq(v.size(), v.data()));
}

struct Tracker {
  std::vector<double> best_x;
  double best_res;
  void offer(std::span<const double> x, double res) {
    if (res < best_res) {
      best_res = res;
      best_x.assign(x.begin(), x.end());
    }
  }
};

KrylovResult solve_cg(const LinOp& op, std::span<const double> b,
                      const KrylovConfig& cfg, std::span<const double> x0) {
  const std::size_t n = b.size();
  KrylovResult out;
  out.x.assign(n, 0.0);
  if (!x0.empty()) out.x.assign(x0.begin(), x0.end());

  const double bnorm = nrm2(b);
  if (bnorm == 0.0) {
    out.x.assign(n, 0.0);
    out.converged = true;
    return out;
  }

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> ax(n), p, ap(n);
  op(out.x, ax);
  axpy(n, -1.0, ax.data(), r.data());
  double rs = nrm2sq(n, r.data());
  p.assign(r.begin(), r.end());

  Tracker track{out.x, std::sqrt(rs) / bnorm};
  const double stop = cfg.tol * bnorm;

  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    if (std::sqrt(rs) <= stop) {
      out.converged = true;
      break;
    }
    op(p, ap);
    const double pap = dot(n, p.data(), ap.data());
    if (!std::isfinite(pap) || pap <= 1e-300 * nrm2sq(n, p.data())) {
      out.breakdown = true;  // direction with no curvature (singular operator)
      break;
    }
    const double alpha = rs / pap;
    axpy(n, alpha, p.data(), out.x.data());
    axpy(n, -alpha, ap.data(), r.data());
    const double rs_new = nrm2sq(n, r.data());
    if (!std::isfinite(rs_new)) {
      out.breakdown = true;
      break;
    }
    track.offer(out.x, std::sqrt(rs_new) / bnorm);
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    ++out.iters;
  }
  out.rel_residual = std::sqrt(rs) / bnorm;
  if (!out.converged && track.best_res < out.rel_residual) {
    out.x = track.best_x;
    out.rel_residual = track.best_res;
  }
  if (out.rel_residual <= cfg.tol) out.converged = true;
  return out;
}

KrylovResult solve_gmres(const LinOp& op, std::span<const double> b,
                         const KrylovConfig& cfg, std::span<const double> x0) {
  const std::size_t n = b.size();
  KrylovResult out;
  out.x.assign(n, 0.0);
  if (!x0.empty()) out.x.assign(x0.begin(), x0.end());

  const double bnorm = nrm2(b);
  if (bnorm == 0.0) {
    out.x.assign(n, 0.0);
    out.converged = true;
    return out;
  }
  const std::size_t m = std::max<std::size_t>(1, std::min(cfg.restart, n));

  std::vector<double> r(n), w(n);
  Tracker track{out.x, 1e308};

  while (out.iters < cfg.max_iters) {
    op(out.x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    double beta = nrm2(r);
    out.rel_residual = beta / bnorm;
    track.offer(out.x, out.rel_residual);
    if (out.rel_residual <= cfg.tol) {
      out.converged = true;
      return out;
    }

    // Arnoldi with Givens rotations on the Hessenberg matrix.
    std::vector<std::vector<double>> v;
    v.emplace_back(r);
    scal(n, 1.0 / beta, v[0].data());
    std::vector<double> h((m + 1) * m, 0.0);  // h(i,j) at i + j*(m+1)
    std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);
    g[0] = beta;
    std::size_t k = 0;
    bool happy = false;

    for (; k < m && out.iters < cfg.max_iters; ++k, ++out.iters) {
      op(v[k], w);
      for (std::size_t i = 0; i <= k; ++i) {
        const double hij = dot(n, w.data(), v[i].data());
        h[i + k * (m + 1)] = hij;
        axpy(n, -hij, v[i].data(), w.data());
      }
      double hk1 = nrm2(w);
      h[k + 1 + k * (m + 1)] = hk1;
      if (!std::isfinite(hk1)) {
        out.breakdown = true;
        break;
      }
      if (hk1 > 1e-300) {
        v.emplace_back(w);
        scal(n, 1.0 / hk1, v.back().data());
      } else {
        happy = true;  // exact solution inside the current subspace
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double t = cs[i] * h[i + k * (m + 1)] + sn[i] * h[i + 1 + k * (m + 1)];
        h[i + 1 + k * (m + 1)] =
            -sn[i] * h[i + k * (m + 1)] + cs[i] * h[i + 1 + k * (m + 1)];
        h[i + k * (m + 1)] = t;
      }
      const double denom = std::hypot(h[k + k * (m + 1)], h[k + 1 + k * (m + 1)]);
      if (denom <= 1e-300) {
        out.breakdown = true;
        break;
      }
      cs[k] = h[k + k * (m + 1)] / denom;
      sn[k] = h[k + 1 + k * (m + 1)] / denom;
      h[k + k * (m + 1)] = denom;
      h[k + 1 + k * (m + 1)] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) / bnorm <= cfg.tol || happy) {
        ++k;
        ++out.iters;
        break;
      }
    }

    if (k > 0) {
      // Back-substitute y from the triangularized system, update x.
      std::vector<double> y(k, 0.0);
      for (std::size_t i = k; i-- > 0;) {
        double s = g[i];
        for (std::size_t j = i + 1; j < k; ++j) s -= h[i + j * (m + 1)] * y[j];
        y[i] = s / h[i + i * (m + 1)];
      }
      for (std::size_t j = 0; j < k; ++j) axpy(n, y[j], v[j].data(), out.x.data());
    }
    if (out.breakdown) break;
    if (happy) {
      op(out.x, w);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
      out.rel_residual = nrm2(r) / bnorm;
      track.offer(out.x, out.rel_residual);
      out.converged = out.rel_residual <= cfg.tol;
      if (out.converged) return out;
      break;
    }
  }

  op(out.x, w);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
  out.rel_residual = nrm2(r) / bnorm;
  track.offer(out.x, out.rel_residual);
  if (track.best_res < out.rel_residual) {
    out.x = track.best_x;
    out.rel_residual = track.best_res;
  }
  out.converged = out.rel_residual <= cfg.tol;
  return out;
}

KrylovResult solve_bicgstab(const LinOp& op, std::span<const double> b,
                            const KrylovConfig& cfg, std::span<const double> x0) {
  const std::size_t n = b.size();
  KrylovResult out;
  out.x.assign(n, 0.0);
  if (!x0.empty()) out.x.assign(x0.begin(), x0.end());

  const double bnorm = nrm2(b);
  if (bnorm == 0.0) {
    out.x.assign(n, 0.0);
    out.converged = true;
    return out;
  }

  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ax(n);
  op(out.x, ax);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
  rhat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double res = nrm2(r);
  Tracker track{out.x, res / bnorm};

  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    if (res / bnorm <= cfg.tol) {
      out.converged = true;
      break;
    }
    const double rho_new = dot(n, rhat.data(), r.data());
    if (std::abs(rho_new) < 1e-300) {
      out.breakdown = true;
      break;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    op(p, v);
    const double rhat_v = dot(n, rhat.data(), v.data());
    if (std::abs(rhat_v) < 1e-300) {
      out.breakdown = true;
      break;
    }
    alpha = rho / rhat_v;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    op(s, t);
    const double tt = nrm2sq(n, t.data());
    omega = tt > 0.0 ? dot(n, t.data(), s.data()) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      out.x[i] += alpha * p[i] + omega * s[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    res = nrm2(r);
    ++out.iters;
    if (!std::isfinite(res)) {
      out.breakdown = true;
      break;
    }
    track.offer(out.x, res / bnorm);
    if (std::abs(omega) < 1e-300) {
      out.breakdown = true;
      break;
    }
  }
  out.rel_residual = res / bnorm;
  if (track.best_res < out.rel_residual) {
    out.x = track.best_x;
    out.rel_residual = track.best_res;
  }
  if (out.rel_residual <= cfg.tol) out.converged = true;
  return out;
}

}  // namespace

KrylovResult krylov_solve(const LinOp& op, std::span<const double> b,
                          const KrylovConfig& cfg, std::span<const double> x0) {
  if (cfg.tol <= 0.0) throw std::invalid_argument("krylov_solve: tol must be > 0");
  if (!x0.empty() && x0.size() != b.size())
    throw std::invalid_argument("krylov_solve: warm start length mismatch");
  for (double v : b)
    if (!std::isfinite(v))
      throw std::invalid_argument("krylov_solve: non-finite right-hand side");
  switch (cfg.method) {
    case KrylovMethod::cg:
      return solve_cg(op, b, cfg, x0);
    case KrylovMethod::gmres:
      return solve_gmres(op, b, cfg, x0);
    case KrylovMethod::bicgstab:
      return solve_bicgstab(op, b, cfg, x0);
  }
  throw std::invalid_argument("krylov_solve: unknown method");
}

}  // namespace ttpinv
