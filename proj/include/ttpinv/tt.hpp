#pragma once

// Tensor-train (TT) data model and algebra.
//
// A TTVector stores an order-N train of 3rd-order cores; core n has shape
// (R_{n-1}, K_n, R_n) with boundary ranks R_0 = R_N = 1. A TTMatrix (MPO)
// stores 4th-order cores (R_{n-1}, I_n, J_n, R_n). All buffers are
// little-endian, so the (I_n, J_n) pair of a matrix core regroups into
// K_n = I_n J_n without moving data, and the canonical unfoldings used by
// QR/SVD sweeps are plain reshapes.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ttpinv/dense.hpp"

namespace ttpinv {

enum class Ortho : unsigned char { none, left, right };

// Dense-conversion guard; larger reconstructions are refused.
inline constexpr std::size_t kDenseGuard = std::size_t{1} << 24;

class TTVector {
 public:
  TTVector() = default;
  explicit TTVector(std::vector<DenseTensor> cores);
  TTVector(std::vector<DenseTensor> cores, std::vector<Ortho> flags);

  static TTVector ones(std::span<const std::size_t> mode_sizes);
  static TTVector zeros(std::span<const std::size_t> mode_sizes);

  std::size_t order() const { return cores_.size(); }
  const DenseTensor& core(std::size_t n) const { return cores_[n]; }
  const std::vector<DenseTensor>& cores() const { return cores_; }

  std::size_t mode_size(std::size_t n) const { return cores_[n].dim(1); }
  std::vector<std::size_t> mode_sizes() const;
  std::size_t rank(std::size_t bond) const;  // bond in [0, N]
  std::vector<std::size_t> ranks() const;    // length N+1
  std::size_t max_rank() const;

  Ortho flag(std::size_t n) const { return flags_[n]; }
  const std::vector<Ortho>& flags() const { return flags_; }

  // log2 of the represented length (mode sizes can overflow 64 bits).
  double log2_length() const;
  bool dense_fits(std::size_t guard = kDenseGuard) const;

  void set_core(std::size_t n, DenseTensor core, Ortho flag);
  // Replace adjacent cores together (the shared rank may change).
  void set_pair(std::size_t n, DenseTensor left, DenseTensor right,
                Ortho left_flag, Ortho right_flag);

 private:
  void validate() const;
  std::vector<DenseTensor> cores_;
  std::vector<Ortho> flags_;
};

class TTMatrix {
 public:
  TTMatrix() = default;
  explicit TTMatrix(std::vector<DenseTensor> cores);
  TTMatrix(std::vector<DenseTensor> cores, std::vector<Ortho> flags);

  static TTMatrix identity(std::span<const std::size_t> mode_sizes);

  std::size_t order() const { return cores_.size(); }
  const DenseTensor& core(std::size_t n) const { return cores_[n]; }
  const std::vector<DenseTensor>& cores() const { return cores_; }

  std::size_t row_size(std::size_t n) const { return cores_[n].dim(1); }
  std::size_t col_size(std::size_t n) const { return cores_[n].dim(2); }
  std::vector<std::size_t> row_sizes() const;
  std::vector<std::size_t> col_sizes() const;
  std::size_t rank(std::size_t bond) const;
  std::vector<std::size_t> ranks() const;
  std::size_t max_rank() const;

  Ortho flag(std::size_t n) const { return flags_[n]; }

  double log2_rows() const;
  double log2_cols() const;
  bool dense_fits(std::size_t guard = kDenseGuard) const;

  void set_core(std::size_t n, DenseTensor core, Ortho flag);
  void set_pair(std::size_t n, DenseTensor left, DenseTensor right,
                Ortho left_flag, Ortho right_flag);

 private:
  void validate() const;
  std::vector<DenseTensor> cores_;
  std::vector<Ortho> flags_;
};

// The merged pair of adjacent cores optimized by one two-site step.
struct SuperCore {
  DenseTensor t;     // (R_{n-1}, K_n, K_{n+1}, R_{n+1})
  std::size_t site;  // n, 0-based left site of the pair
};

enum class SplitDirection { left_orthogonal, right_orthogonal };

struct SplitResult {
  DenseTensor left;   // core n
  DenseTensor right;  // core n+1
  std::size_t rank;
  double discarded_norm;
};

// --- conversions -----------------------------------------------------------

DenseTensor tt_to_dense(const TTVector& t);  // order-N tensor
DenseTensor tt_to_dense(const TTMatrix& a);  // (prod I) x (prod J) matrix

// TT-SVD sweep; `delta` is the absolute per-split tail budget, caps are per
// bond (empty = uncapped).
TTVector tt_from_dense(const DenseTensor& x, double delta,
                       std::span<const std::size_t> rank_caps = {});

// Dense matrix -> MPO over the given per-site row/col factorizations.
TTMatrix tt_matrix_from_dense(const DenseTensor& a,
                              std::span<const std::size_t> row_sizes,
                              std::span<const std::size_t> col_sizes,
                              double delta,
                              std::span<const std::size_t> rank_caps = {});

// Reshape each 4th-order core over K_n = I_n J_n; data is untouched.
TTVector extended_vectorize(const TTMatrix& a);
// Inverse reshape; per-site (row, col) factorizations must multiply back.
TTMatrix matrix_from_extended(const TTVector& v,
                              std::span<const std::size_t> row_sizes,
                              std::span<const std::size_t> col_sizes);

// --- orthogonalization and truncation --------------------------------------

// Make cores [0, pivot) left-orthogonal and (pivot+1, N) right-orthogonal;
// the reconstruction is preserved. pivot in [0, N-2].
TTVector orthogonalized(TTVector t, std::size_t pivot);
TTMatrix orthogonalized(TTMatrix a, std::size_t pivot);

SuperCore merge_cores(const TTVector& t, std::size_t site);
SuperCore merge_cores(const TTMatrix& a, std::size_t site);

// SVD split of the canonical-2 unfolding of a supercore; tail rule and cap
// as in la::truncation_rank (cap = 0 means uncapped).
SplitResult split_supercore(const SuperCore& s, double delta, std::size_t cap,
                            SplitDirection dir);

// TT rounding; `delta` is relative: ||T - T'|| <= delta sqrt(N-1) ||T||
// when no cap binds.
TTVector tt_round(const TTVector& t, double delta,
                  std::span<const std::size_t> rank_caps = {});
TTMatrix tt_round(const TTMatrix& a, double delta,
                  std::span<const std::size_t> rank_caps = {});

// --- algebra ----------------------------------------------------------------

double tt_norm(const TTVector& t);
double tt_norm(const TTMatrix& a);
double tt_inner(const TTVector& x, const TTVector& y);

TTVector tt_scale(TTVector t, double alpha);
TTVector tt_axpby(double alpha, const TTVector& x, double beta, const TTVector& y);
TTMatrix tt_axpby(double alpha, const TTMatrix& x, double beta, const TTMatrix& y);

TTVector tt_matvec(const TTMatrix& a, const TTVector& x);
TTMatrix tt_matmat(const TTMatrix& a, const TTMatrix& b);
TTMatrix tt_transpose(const TTMatrix& a);

// --- random trains ----------------------------------------------------------

// Deterministic standard-normal cores from a fixed-algorithm generator.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed);
  double next();               // standard normal
  double uniform01();          // uniform in (0, 1]
  DenseTensor tensor(std::vector<std::size_t> shape);

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

TTVector tt_random(std::span<const std::size_t> mode_sizes,
                   std::span<const std::size_t> interior_ranks, NormalRng& rng);
TTMatrix tt_random(std::span<const std::size_t> row_sizes,
                   std::span<const std::size_t> col_sizes,
                   std::span<const std::size_t> interior_ranks, NormalRng& rng);

}  // namespace ttpinv
