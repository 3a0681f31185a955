#include "ttpinv/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ttpinv {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'N', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.append(b, 8);
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  std::string buf;
  std::size_t pos = 0;
  std::string path;

  std::uint64_t u64() {
    if (pos + 8 > buf.size())
      throw IoError("truncated TT container: " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void append_cores(std::string& out, const std::vector<DenseTensor>& cores) {
  for (const DenseTensor& c : cores)
    for (double v : c.values()) put_f64(out, v);
}

}  // namespace

void write_tt(const std::string& path, const TTVector& v) {
  std::string out(kMagic, 4);
  put_u64(out, 0);
  put_u64(out, v.order());
  for (std::size_t n = 0; n < v.order(); ++n) put_u64(out, v.mode_size(n));
  for (std::size_t b = 0; b <= v.order(); ++b) put_u64(out, v.rank(b));
  append_cores(out, v.cores());
  write_file(path, out);
}

void write_tt(const std::string& path, const TTMatrix& m) {
  std::string out(kMagic, 4);
  put_u64(out, 1);
  put_u64(out, m.order());
  for (std::size_t n = 0; n < m.order(); ++n) put_u64(out, m.row_size(n));
  for (std::size_t n = 0; n < m.order(); ++n) put_u64(out, m.col_size(n));
  for (std::size_t b = 0; b <= m.order(); ++b) put_u64(out, m.rank(b));
  append_cores(out, m.cores());
  write_file(path, out);
}

TTAny read_tt(const std::string& path) {
  Reader r{read_file(path), 0, path};
  if (r.buf.size() < 4 || std::memcmp(r.buf.data(), kMagic, 4) != 0)
    throw IoError("not a TT container (bad magic): " + path);
  r.pos = 4;
  const std::uint64_t kind = r.u64();
  const std::uint64_t n_sites = r.u64();
  if (kind > 1) throw IoError("unknown container kind: " + path);
  if (n_sites == 0 || n_sites > 4096)
    throw IoError("implausible core count in container: " + path);

  if (kind == 0) {
    std::vector<std::size_t> modes(n_sites);
    for (auto& m : modes) m = r.u64();
    std::vector<std::size_t> ranks(n_sites + 1);
    for (auto& x : ranks) x = r.u64();
    std::vector<DenseTensor> cores;
    cores.reserve(n_sites);
    for (std::size_t n = 0; n < n_sites; ++n) {
      DenseTensor c({ranks[n], modes[n], ranks[n + 1]});
      for (auto& v : c.values()) v = r.f64();
      cores.push_back(std::move(c));
    }
    return TTVector(std::move(cores));
  }

  std::vector<std::size_t> rows(n_sites), cols(n_sites);
  for (auto& m : rows) m = r.u64();
  for (auto& m : cols) m = r.u64();
  std::vector<std::size_t> ranks(n_sites + 1);
  for (auto& x : ranks) x = r.u64();
  std::vector<DenseTensor> cores;
  cores.reserve(n_sites);
  for (std::size_t n = 0; n < n_sites; ++n) {
    DenseTensor c({ranks[n], rows[n], cols[n], ranks[n + 1]});
    for (auto& v : c.values()) v = r.f64();
    cores.push_back(std::move(c));
  }
  return TTMatrix(std::move(cores));
}

TTVector read_tt_vector(const std::string& path) {
  TTAny any = read_tt(path);
  if (auto* v = std::get_if<TTVector>(&any)) return std::move(*v);
  throw IoError("expected a vector-kind container: " + path);
}

TTMatrix read_tt_matrix(const std::string& path) {
  TTAny any = read_tt(path);
  if (auto* m = std::get_if<TTMatrix>(&any)) return std::move(*m);
  throw IoError("expected a matrix-kind container: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, text);
}

std::string trace_csv(const ConvergenceTrace& trace) {
  std::ostringstream os;
  os << "sweep,iter,site,rel_residual,max_rank,local_iters,wall_ms\n";
  os.precision(17);
  for (const TraceRow& row : trace.rows) {
    os << row.sweep << ',' << row.iter << ',' << row.site << ','
       << row.rel_residual << ',' << row.max_rank << ',' << row.local_iters
       << ',' << row.wall_ms << '\n';
  }
  return os.str();
}

void write_trace_csv(const std::string& path, const ConvergenceTrace& trace) {
  write_file(path, trace_csv(trace));
}

std::string verify_report_json(const ObjectiveReport& objective,
                               const BoundReport* bounds, double lambda) {
  nlohmann::json j;
  j["lambda"] = lambda;
  j["f_lambda"] = objective.f_lambda;
  j["r_lambda"] = objective.r_lambda;
  j["f_min"] = objective.f_min ? nlohmann::json(*objective.f_min)
                               : nlohmann::json(nullptr);
  j["g_lambda"] = objective.g_lambda ? nlohmann::json(*objective.g_lambda)
                                     : nlohmann::json(nullptr);
  if (bounds) {
    nlohmann::json b;
    b["lemma_identity_error"] = bounds->lemma_identity_error;
    b["symmetricity_margin"] = bounds->symmetricity_margin;
    b["eigenvalue_margin"] = bounds->eigenvalue_margin;
    b["singular_value_margin"] = bounds->singular_value_margin;
    b["convergence_margin"] = bounds->convergence_margin
                                  ? nlohmann::json(*bounds->convergence_margin)
                                  : nlohmann::json(nullptr);
    j["bounds"] = std::move(b);
  } else {
    j["bounds"] = nlohmann::json(nullptr);
  }
  return j.dump(2) + "\n";
}

}  // namespace ttpinv
