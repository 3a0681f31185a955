#pragma once

// Matrix-free Krylov solvers (CG, restarted GMRES, BiCGSTAB) over linear
// operator handles. Deterministic given the operator and inputs.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ttpinv {

using LinOp = std::function<void(std::span<const double> x, std::span<double> y)>;

enum class KrylovMethod { cg, gmres, bicgstab };

struct KrylovConfig {
  KrylovMethod method = KrylovMethod::cg;
  double tol = 1e-8;            // on ||b - A x|| / ||b||
  std::size_t max_iters = 500;  // total operator applications, roughly
  std::size_t restart = 30;     // GMRES cycle length
};

struct KrylovResult {
  std::vector<double> x;
  std::size_t iters = 0;
  double rel_residual = 0.0;
  bool converged = false;
  bool breakdown = false;  // semidefinite/unstable direction encountered
};

KrylovResult krylov_solve(const LinOp& op, std::span<const double> b,
                          const KrylovConfig& cfg,
                          std::span<const double> x0 = {});

}  // namespace ttpinv
