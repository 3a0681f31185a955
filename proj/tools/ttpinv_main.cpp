// Command-line surface: generate test operators, compute regularized
// pseudoinverses, solve (optionally preconditioned) linear systems, and
// verify a computed P against the dense oracle.
//
// Exit codes: 0 success, 1 I/O error, 2 validation error, 3 non-convergence
// (results are still written, flagged in the trace).

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ttpinv/gallery.hpp"
#include "ttpinv/io.hpp"
#include "ttpinv/kernels.hpp"
#include "ttpinv/linsolve.hpp"
#include "ttpinv/mals.hpp"
#include "ttpinv/oracle.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kIoError = 1;
constexpr int kValidationError = 2;
constexpr int kNoConvergence = 3;

struct CommonOpts {
  bool deterministic = false;
  std::size_t threads = 1;
};

void apply_common(const CommonOpts& opts) {
  if (opts.deterministic) ttpinv::kernels::force(ttpinv::kernels::Isa::scalar);
  // Kernels are single-threaded; --threads is accepted for interface
  // stability and clamped to 1.
  (void)opts.threads;
}

ttpinv::MALSConfig mals_config_from(double lambda, double eps, double delta,
                                    std::size_t max_rank,
                                    std::size_t max_sweeps,
                                    const std::string& solver,
                                    std::uint64_t seed) {
  ttpinv::MALSConfig cfg;
  cfg.lambda = lambda;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.max_rank = max_rank;
  cfg.max_sweeps = max_sweeps;
  cfg.seed = seed;
  if (solver == "cg") {
    cfg.local_method = ttpinv::KrylovMethod::cg;
  } else if (solver == "gmres") {
    cfg.local_method = ttpinv::KrylovMethod::gmres;
  } else if (solver == "bicgstab") {
    cfg.local_method = ttpinv::KrylovMethod::bicgstab;
  } else {
    throw CLI::ValidationError("--solver", "unknown solver: " + solver);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-train pseudoinverse toolkit"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_flag("--deterministic", common.deterministic,
               "pin the scalar kernel path (bit-stable across machines)");
  app.add_option("--threads", common.threads,
                 "kernel threads (currently always 1)");

  // generate -----------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "emit a test operator in TT form");
  std::string family;
  std::size_t gen_n = 4;
  double gen_b = 0.5, gen_k0 = 0.5;
  std::optional<double> gen_c;
  std::uint64_t gen_seed = 0;
  std::string gen_out, gen_rhs_out;
  gen->add_option("--family", family,
                  "laplace | random-svd | circulant | convection")
      ->required();
  gen->add_option("--N", gen_n, "sites (M per axis for convection)")->required();
  gen->add_option("--B", gen_b, "circulant spectrum parameter");
  gen->add_option("--k0", gen_k0, "random-svd decay parameter");
  double gen_c_raw = 0.0;
  auto* gen_c_opt = gen->add_option("--c", gen_c_raw, "convection coefficient override");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-o,--output", gen_out, "operator output path")->required();
  gen->add_option("--rhs-out", gen_rhs_out,
                  "rhs output path (convection; default <output>.b.tt)");

  // pinv ----------------------------------------------------------------------
  auto* pinv = app.add_subcommand("pinv", "approximate regularized pseudoinverse");
  std::string pinv_in, pinv_out, pinv_trace, pinv_solver = "cg";
  double pinv_lambda = 0.0, pinv_eps = 1e-4, pinv_delta = -1.0;
  std::size_t pinv_max_rank = 50, pinv_max_sweeps = 50;
  std::uint64_t pinv_seed = 0;
  pinv->add_option("input", pinv_in, "operator container (TT matrix)")->required();
  pinv->add_option("-o,--output", pinv_out, "output path for P")->required();
  pinv->add_option("--lambda", pinv_lambda, "regularization");
  pinv->add_option("--eps", pinv_eps, "stopping tolerance");
  pinv->add_option("--delta", pinv_delta, "truncation (default 1e-6 (N-1)^{-1/2})");
  pinv->add_option("--max-rank", pinv_max_rank, "rank cap");
  pinv->add_option("--max-sweeps", pinv_max_sweeps, "sweep limit");
  pinv->add_option("--solver", pinv_solver, "cg | gmres | bicgstab");
  pinv->add_option("--seed", pinv_seed, "initialization seed");
  pinv->add_option("--trace", pinv_trace, "convergence trace CSV path");

  // solve ---------------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "solve A x = b, optionally preconditioned");
  std::string solve_a, solve_b, solve_precond, solve_out, solve_trace,
      solve_solver = "gmres";
  double solve_tol = 1e-6, solve_delta = -1.0, solve_round = -1.0;
  std::size_t solve_max_rank = 50, solve_max_sweeps = 50;
  std::uint64_t solve_seed = 0;
  solve->add_option("operator", solve_a, "operator container")->required();
  solve->add_option("rhs", solve_b, "right-hand side container")->required();
  solve->add_option("--precond", solve_precond, "preconditioner P container");
  solve->add_option("-o,--output", solve_out, "solution output path")->required();
  solve->add_option("--tol", solve_tol, "relative residual target");
  solve->add_option("--delta", solve_delta, "truncation");
  solve->add_option("--round-delta", solve_round,
                    "rounding for P^T A and P^T b (default 1e-8)");
  solve->add_option("--max-rank", solve_max_rank, "rank cap");
  solve->add_option("--max-sweeps", solve_max_sweeps, "sweep limit");
  solve->add_option("--solver", solve_solver, "local solver: cg | gmres | bicgstab");
  solve->add_option("--seed", solve_seed, "initialization seed");
  solve->add_option("--trace", solve_trace, "convergence trace CSV path");

  // verify ---------------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "objective report for a computed P");
  std::string ver_a, ver_p, ver_out;
  double ver_lambda = 0.0;
  verify->add_option("operator", ver_a, "operator container")->required();
  verify->add_option("pinv", ver_p, "pseudoinverse container")->required();
  verify->add_option("--lambda", ver_lambda, "regularization used");
  verify->add_option("-o,--output", ver_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    apply_common(common);

    if (gen->parsed()) {
      ttpinv::ProblemSpec spec;
      if (family == "laplace") {
        spec.family = ttpinv::Family::laplace;
      } else if (family == "random-svd") {
        spec.family = ttpinv::Family::random_svd;
      } else if (family == "circulant") {
        spec.family = ttpinv::Family::circulant_prescribed;
      } else if (family == "convection") {
        spec.family = ttpinv::Family::convection_diffusion;
      } else {
        std::cerr << "unknown family: " << family << "\n";
        return kValidationError;
      }
      spec.n = gen_n;
      spec.b_param = gen_b;
      spec.k0 = gen_k0;
      spec.seed = gen_seed;
      if (gen_c_opt->count() > 0) spec.c_override = gen_c_raw;

      ttpinv::GeneratedProblem prob = ttpinv::generate(spec);
      ttpinv::write_tt(gen_out, prob.a);
      ttpinv::write_text(gen_out + ".meta", prob.metadata);
      if (prob.b) {
        const std::string rhs_path =
            gen_rhs_out.empty() ? gen_out + ".b.tt" : gen_rhs_out;
        ttpinv::write_tt(rhs_path, *prob.b);
      }
      return kOk;
    }

    if (pinv->parsed()) {
      ttpinv::TTMatrix a = ttpinv::read_tt_matrix(pinv_in);
      ttpinv::MALSConfig cfg =
          mals_config_from(pinv_lambda, pinv_eps, pinv_delta, pinv_max_rank,
                           pinv_max_sweeps, pinv_solver, pinv_seed);
      ttpinv::MALSResult res = ttpinv::mals_pinv(a, cfg);
      ttpinv::write_tt(pinv_out, res.p);
      if (!pinv_trace.empty()) ttpinv::write_trace_csv(pinv_trace, res.trace);
      if (!res.trace.converged) {
        std::cerr << "pinv: stopped without meeting the stopping rule ("
                  << res.trace.stop_reason << ")\n";
        return kNoConvergence;
      }
      return kOk;
    }

    if (solve->parsed()) {
      ttpinv::TTMatrix a = ttpinv::read_tt_matrix(solve_a);
      ttpinv::TTVector b = ttpinv::read_tt_vector(solve_b);

      ttpinv::LinearSystemTT sys{a, b, false};
      if (!solve_precond.empty()) {
        ttpinv::TTMatrix p = ttpinv::read_tt_matrix(solve_precond);
        ttpinv::PrecondSystem pre =
            ttpinv::build_preconditioned_system(a, p, b, solve_round);
        sys = std::move(pre.sys);
      }

      ttpinv::LinsolveConfig cfg;
      cfg.tol = solve_tol;
      cfg.delta = solve_delta;
      cfg.max_rank = solve_max_rank;
      cfg.max_sweeps = solve_max_sweeps;
      cfg.seed = solve_seed;
      if (solve_solver == "cg") {
        cfg.local_method = ttpinv::KrylovMethod::cg;
      } else if (solve_solver == "gmres") {
        cfg.local_method = ttpinv::KrylovMethod::gmres;
      } else if (solve_solver == "bicgstab") {
        cfg.local_method = ttpinv::KrylovMethod::bicgstab;
      } else {
        std::cerr << "unknown solver: " << solve_solver << "\n";
        return kValidationError;
      }

      ttpinv::LinsolveResult res = ttpinv::mals_linsolve(sys, cfg);
      ttpinv::write_tt(solve_out, res.x);
      if (!solve_trace.empty()) ttpinv::write_trace_csv(solve_trace, res.trace);
      if (!res.converged) {
        std::cerr << "solve: residual " << res.rel_residual
                  << " did not reach tol " << solve_tol << "\n";
        return kNoConvergence;
      }
      return kOk;
    }

    if (verify->parsed()) {
      ttpinv::TTMatrix a = ttpinv::read_tt_matrix(ver_a);
      ttpinv::TTMatrix p = ttpinv::read_tt_matrix(ver_p);
      ttpinv::ObjectiveReport obj = ttpinv::objective_report(a, p, ver_lambda);
      std::optional<ttpinv::BoundReport> bounds;
      if (a.dense_fits()) {
        bounds = ttpinv::oracle_checks(ttpinv::tt_to_dense(a),
                                       ttpinv::tt_to_dense(p), ver_lambda);
      }
      const std::string json = ttpinv::verify_report_json(
          obj, bounds ? &*bounds : nullptr, ver_lambda);
      if (ver_out.empty()) {
        std::cout << json;
      } else {
        ttpinv::write_text(ver_out, json);
      }
      return kOk;
    }
  } catch (const ttpinv::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  }
  return kValidationError;
}
