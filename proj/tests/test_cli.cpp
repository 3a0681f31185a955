// End-to-end checks of the command-line binary. The path to the built
// executable is injected by the build as TTPINV_CLI_PATH.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ttpinv/io.hpp"
#include "ttpinv/tt.hpp"

namespace {

std::string cli() { return TTPINV_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > /tmp/ttpinv_cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string output() {
  std::ifstream f("/tmp/ttpinv_cli_out.txt");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct Workdir {
  std::string dir;
  Workdir() : dir("/tmp/ttpinv_cli_wd") {
    const int rc = std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
    (void)rc;
  }
  std::string operator/(const std::string& name) const { return dir + "/" + name; }
};

}  // namespace

TEST_CASE("generate writes a valid container and sidecar metadata") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 6 -o " + (wd / "A.tt")) == 0);
  ttpinv::TTMatrix a = ttpinv::read_tt_matrix(wd / "A.tt");
  CHECK(a.order() == 6);
  CHECK(a.max_rank() <= 3);
  const std::string meta = slurp(wd / "A.tt.meta");
  CHECK(meta.find("laplace") != std::string::npos);
}

TEST_CASE("generate is deterministic for a fixed seed") {
  Workdir wd;
  REQUIRE(run("generate --family random-svd --N 8 --k0 0.5 --seed 7 -o " +
              (wd / "a1.tt")) == 0);
  REQUIRE(run("generate --family random-svd --N 8 --k0 0.5 --seed 7 -o " +
              (wd / "a2.tt")) == 0);
  CHECK(slurp(wd / "a1.tt") == slurp(wd / "a2.tt"));
}

TEST_CASE("generate enforces the desk-scale guard with exit 2") {
  Workdir wd;
  CHECK(run("generate --family circulant --N 40 -o " + (wd / "A.tt")) == 2);
}

TEST_CASE("pinv on the identity reaches a tiny residual") {
  Workdir wd;
  // Identity = laplace is not identity; use random-svd with K0=1? The
  // simplest identity container comes from the library.
  ttpinv::write_tt(wd / "I.tt",
                   ttpinv::TTMatrix::identity(std::vector<std::size_t>{2, 2, 2, 2}));
  REQUIRE(run("pinv " + (wd / "I.tt") + " --lambda 0 --eps 1e-6 -o " +
              (wd / "P.tt") + " --trace " + (wd / "trace.csv")) == 0);
  const std::string csv = slurp(wd / "trace.csv");
  // Final rel_residual column entry is <= 1e-8.
  std::istringstream is(csv);
  std::string line, last;
  std::getline(is, line);  // header
  while (std::getline(is, line))
    if (!line.empty()) last = line;
  // sweep,iter,site,rel_residual,...
  std::size_t p = 0;
  for (int c = 0; c < 3; ++c) p = last.find(',', p) + 1;
  const double r = std::stod(last.substr(p));
  CHECK(r <= 1e-8);
}

TEST_CASE("pinv trace on the laplacian is monotone") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 10 -o " + (wd / "A.tt")) == 0);
  REQUIRE(run("pinv " + (wd / "A.tt") +
              " --lambda 1e-2 --eps 1e-4 --max-rank 20 --max-sweeps 5 -o " +
              (wd / "P.tt") + " --trace " + (wd / "trace.csv")) == 0);
  std::istringstream is(slurp(wd / "trace.csv"));
  std::string line;
  std::getline(is, line);
  double prev = 1e300;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t p = 0;
    for (int c = 0; c < 3; ++c) p = line.find(',', p) + 1;
    const double r = std::stod(line.substr(p));
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("missing input exits 1 and names the path") {
  Workdir wd;
  CHECK(run("pinv " + (wd / "missing.tt") + " -o " + (wd / "P.tt")) == 1);
  CHECK(output().find("missing.tt") != std::string::npos);
}

TEST_CASE("solve rejects mismatched shapes with exit 2") {
  Workdir wd;
  ttpinv::write_tt(wd / "A.tt",
                   ttpinv::TTMatrix::identity(std::vector<std::size_t>{2, 2, 2}));
  ttpinv::write_tt(wd / "b.tt",
                   ttpinv::TTVector::ones(std::vector<std::size_t>{2, 2}));
  CHECK(run("solve " + (wd / "A.tt") + " " + (wd / "b.tt") + " -o " +
            (wd / "x.tt")) == 2);
}

TEST_CASE("solve with the identity preconditioner matches the plain run") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 4 -o " + (wd / "A.tt")) == 0);
  ttpinv::write_tt(wd / "I.tt",
                   ttpinv::TTMatrix::identity(std::vector<std::size_t>{2, 2, 2, 2}));
  ttpinv::write_tt(wd / "b.tt",
                   ttpinv::TTVector::ones(std::vector<std::size_t>{2, 2, 2, 2}));
  REQUIRE(run("solve " + (wd / "A.tt") + " " + (wd / "b.tt") +
              " --tol 1e-8 --seed 5 -o " + (wd / "x_plain.tt") + " --trace " +
              (wd / "t_plain.csv")) == 0);
  REQUIRE(run("solve " + (wd / "A.tt") + " " + (wd / "b.tt") +
              " --precond " + (wd / "I.tt") + " --round-delta 0 --tol 1e-8"
              " --seed 5 -o " + (wd / "x_pre.tt") + " --trace " +
              (wd / "t_pre.csv")) == 0);

  ttpinv::TTVector x1 = ttpinv::read_tt_vector(wd / "x_plain.tt");
  ttpinv::TTVector x2 = ttpinv::read_tt_vector(wd / "x_pre.tt");
  const double n1 = ttpinv::tt_norm(ttpinv::tt_axpby(1.0, x1, -1.0, x2));
  CHECK(n1 <= 1e-8 * ttpinv::tt_norm(x1));
}

TEST_CASE("convection pipeline runs end to end with a preconditioner") {
  Workdir wd;
  REQUIRE(run("generate --family convection --N 2 -o " + (wd / "A.tt") +
              " --rhs-out " + (wd / "b.tt")) == 0);
  REQUIRE(run("pinv " + (wd / "A.tt") +
              " --lambda 1e-4 --eps 0.05 --max-rank 20 --max-sweeps 6 -o " +
              (wd / "P.tt")) == 0);
  REQUIRE(run("solve " + (wd / "A.tt") + " " + (wd / "b.tt") + " --precond " +
              (wd / "P.tt") + " --tol 1e-6 --seed 3 -o " + (wd / "x.tt")) == 0);

  // The preconditioned solve recovers the manufactured solution.
  ttpinv::TTVector x = ttpinv::read_tt_vector(wd / "x.tt");
  ttpinv::TTMatrix a = ttpinv::read_tt_matrix(wd / "A.tt");
  ttpinv::TTVector b = ttpinv::read_tt_vector(wd / "b.tt");
  ttpinv::TTVector resid =
      ttpinv::tt_axpby(1.0, ttpinv::tt_matvec(a, x), -1.0, b);
  CHECK(ttpinv::tt_norm(resid) <= 1e-4 * ttpinv::tt_norm(b));
}

TEST_CASE("verify reports residual and oracle fields at desk scale") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 4 -o " + (wd / "A.tt")) == 0);
  REQUIRE(run("pinv " + (wd / "A.tt") + " --lambda 1e-2 --eps 1e-5 -o " +
              (wd / "P.tt") + " --trace " + (wd / "trace.csv")) == 0);
  REQUIRE(run("verify " + (wd / "A.tt") + " " + (wd / "P.tt") +
              " --lambda 1e-2 -o " + (wd / "report.json")) == 0);
  const std::string rep = slurp(wd / "report.json");
  CHECK(rep.find("\"f_lambda\"") != std::string::npos);
  CHECK(rep.find("\"r_lambda\"") != std::string::npos);
  CHECK(rep.find("\"f_min\"") != std::string::npos);
  CHECK(rep.find("\"g_lambda\"") != std::string::npos);
  CHECK(rep.find("\"bounds\"") != std::string::npos);
  CHECK(rep.find("null") == std::string::npos);  // oracle available here

  // The reported residual agrees with the solver's final trace row.
  std::istringstream is(slurp(wd / "trace.csv"));
  std::string line, last;
  std::getline(is, line);
  while (std::getline(is, line))
    if (!line.empty()) last = line;
  std::size_t p = 0;
  for (int c = 0; c < 3; ++c) p = last.find(',', p) + 1;
  const double r_trace = std::stod(last.substr(p));
  const std::size_t rp = rep.find("\"r_lambda\": ");
  const double r_verify = std::stod(rep.substr(rp + 12));
  CHECK(std::abs(r_trace - r_verify) <= 1e-10);
}

TEST_CASE("unconverged runs exit 3 but still write their artifacts") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 6 -o " + (wd / "A.tt")) == 0);
  // One sweep at lambda 0 cannot satisfy the stopping rule here.
  CHECK(run("pinv " + (wd / "A.tt") +
            " --lambda 0 --eps 1e-10 --max-sweeps 1 -o " + (wd / "P.tt") +
            " --trace " + (wd / "t.csv")) == 3);
  CHECK(!slurp(wd / "P.tt").empty());
  CHECK(!slurp(wd / "t.csv").empty());
}

TEST_CASE("verify on oversized operators keeps r_lambda and nulls the oracle") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 13 -o " + (wd / "A.tt")) == 0);
  ttpinv::write_tt(wd / "P.tt", ttpinv::TTMatrix::identity(
                                    std::vector<std::size_t>(13, 2)));
  REQUIRE(run("verify " + (wd / "A.tt") + " " + (wd / "P.tt") +
              " --lambda 1e-2 -o " + (wd / "r.json")) == 0);
  const std::string rep = slurp(wd / "r.json");
  CHECK(rep.find("\"r_lambda\"") != std::string::npos);
  CHECK(rep.find("\"f_min\": null") != std::string::npos);
  CHECK(rep.find("\"bounds\": null") != std::string::npos);
}

TEST_CASE("deterministic mode gives byte-identical artifacts") {
  Workdir wd;
  REQUIRE(run("generate --family laplace --N 5 -o " + (wd / "A.tt")) == 0);
  REQUIRE(run("--deterministic pinv " + (wd / "A.tt") +
              " --lambda 1e-2 --eps 1e-4 --seed 11 -o " + (wd / "p1.tt")) == 0);
  REQUIRE(run("--deterministic pinv " + (wd / "A.tt") +
              " --lambda 1e-2 --eps 1e-4 --seed 11 -o " + (wd / "p2.tt")) == 0);
  CHECK(slurp(wd / "p1.tt") == slurp(wd / "p2.tt"));
}
