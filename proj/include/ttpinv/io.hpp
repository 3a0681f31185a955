#pragma once

// File formats: the TTN1 binary container for trains, the convergence-trace
// CSV, and the JSON verification report. Writers are byte-deterministic.

#include <stdexcept>
#include <string>
#include <variant>

#include "ttpinv/mals.hpp"
#include "ttpinv/oracle.hpp"
#include "ttpinv/tt.hpp"

namespace ttpinv {

// I/O failures (missing file, short read, bad magic).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Container layout: magic "TTN1"; then uint64 little-endian fields: kind
// (0 = vector, 1 = matrix), N; then N mode sizes (vector) or I_1..I_N,
// J_1..J_N (matrix); then N+1 ranks; then the cores concatenated, each
// flattened first-index-fastest as IEEE-754 binary64 little-endian.
void write_tt(const std::string& path, const TTVector& v);
void write_tt(const std::string& path, const TTMatrix& m);

using TTAny = std::variant<TTVector, TTMatrix>;
TTAny read_tt(const std::string& path);
TTVector read_tt_vector(const std::string& path);
TTMatrix read_tt_matrix(const std::string& path);

void write_text(const std::string& path, const std::string& text);

// sweep,iter,site,rel_residual,max_rank,local_iters,wall_ms
std::string trace_csv(const ConvergenceTrace& trace);
void write_trace_csv(const std::string& path, const ConvergenceTrace& trace);

// UTF-8 JSON with fields f_lambda, r_lambda, f_min, g_lambda, bounds{...};
// oracle fields are null when no dense check was possible.
std::string verify_report_json(const ObjectiveReport& objective,
                               const BoundReport* bounds, double lambda);

}  // namespace ttpinv
