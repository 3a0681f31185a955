#pragma once

// Environment tensors for the two-site pseudoinverse sweeps.
//
// For cores P (the iterate) and A (the data) the per-site transfer blocks
//
//   Z1 = sum_{i,j,i',j'} P(:,i,j,:) (x) A(:,i,j',:) (x) A(:,i',j',:) (x) P(:,i',j,:)
//   Z2 = sum_{i,j}       P(:,i,j,:) (x) A(:,i,j,:)
//
// satisfy trace(P^T A A^T P) = Z1^(1)...Z1^(N) and trace(P^T A) = Z2^(1)...Z2^(N).
// The left/right environments are the partial products, kept as tensors
// L1 (R, RA, RA, R) / L2 (R, RA) and advanced by direct five-tensor
// contractions; Z1 itself is materialized only on the desk-scale oracle path.
//
// Mode order of L1/R1 is (P-leg of the iterate, A, A, P-leg of the output),
// matching the printed Kronecker factor order.

#include <cstddef>
#include <span>
#include <vector>

#include "ttpinv/dense.hpp"

namespace ttpinv {

struct SiteBlocks {
  DenseTensor z1;  // (R RA)^2 x (R' RA')^2
  DenseTensor z2;  // (R RA) x (R' RA')
};

// Materialized transfer blocks for one site (desk-scale oracle path).
SiteBlocks site_blocks(const DenseTensor& p_core, const DenseTensor& a_core);

// Flatten an environment tensor to the row/column vector that multiplies the
// materialized Z blocks (Kronecker flattening: last factor fastest).
DenseTensor env_as_z_vector(const DenseTensor& env);

DenseTensor scalar_env1();  // (1,1,1,1) boundary block
DenseTensor scalar_env2();  // (1,1) boundary block

// One-site advances; cores are 4th-order (rank, I, J, rank).
DenseTensor advance_left_l1(const DenseTensor& l1, const DenseTensor& p_core,
                            const DenseTensor& a_core);
DenseTensor advance_left_l2(const DenseTensor& l2, const DenseTensor& p_core,
                            const DenseTensor& a_core);
DenseTensor advance_right_r1(const DenseTensor& r1, const DenseTensor& p_core,
                             const DenseTensor& a_core);
DenseTensor advance_right_r2(const DenseTensor& r2, const DenseTensor& p_core,
                             const DenseTensor& a_core);

// Environments for one solve. Index m in [0, N]: left blocks contract sites
// < m, right blocks contract sites >= m; l*[0] and r*[N] are scalar ones.
struct EnvBlocks {
  std::vector<DenseTensor> l1, l2, r1, r2;

  static EnvBlocks boundaries(std::size_t n_sites);
  void update_left(std::size_t m, const DenseTensor& p_core,
                   const DenseTensor& a_core);
  void update_right(std::size_t m, const DenseTensor& p_core,
                    const DenseTensor& a_core);
};

// b_bar = (frame)^T vec(A), contracted from {L2, A_n, A_{n+1}, R2}; the
// little-endian flattening matches the supercore vectorization.
std::vector<double> assemble_local_rhs(const DenseTensor& l2,
                                       const DenseTensor& r2,
                                       const DenseTensor& a_left,
                                       const DenseTensor& a_right);

// The reduced operator A_bar_n held implicitly through its environments; the
// frame matrix is never materialized here.
class LocalProblem {
 public:
  LocalProblem(DenseTensor l1, DenseTensor r1, DenseTensor l2, DenseTensor r2,
               DenseTensor a_left, DenseTensor a_right, double lambda,
               std::size_t site);

  std::size_t dim() const { return dim_; }
  const std::vector<std::size_t>& x_shape() const { return x_shape_; }
  const std::vector<double>& rhs() const { return rhs_; }
  double lambda() const { return lambda_; }
  std::size_t site() const { return site_; }

  // y = A_bar_n x (the lambda term is the caller's).
  std::vector<double> apply(std::span<const double> x) const;

 private:
  DenseTensor l1_, r1_;
  DenseTensor a_left_, a_right_;
  std::vector<double> rhs_;
  std::vector<std::size_t> x_shape_;
  std::size_t dim_;
  double lambda_;
  std::size_t site_;
};

inline std::vector<double> apply_local_operator(const LocalProblem& lp,
                                                std::span<const double> x) {
  return lp.apply(x);
}

}  // namespace ttpinv
