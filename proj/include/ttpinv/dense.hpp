#pragma once

// Dense N-way arrays in little-endian layout (first index varies fastest).
// An order-2 tensor is exactly a column-major matrix, so matricizations that
// only regroup leading/trailing modes are zero-copy reshapes and LAPACK can
// consume the buffers directly.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ttpinv {

class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> shape);
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseTensor matrix(std::size_t rows, std::size_t cols);
  static DenseTensor identity(std::size_t n);

  std::size_t order() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t mode) const { return shape_[mode]; }
  std::size_t size() const { return data_.size(); }

  std::size_t rows() const;  // order-2 only
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::span<const std::size_t> idx) const;
  double& at(std::span<const std::size_t> idx) { return data_[offset(idx)]; }
  double at(std::span<const std::size_t> idx) const { return data_[offset(idx)]; }

  template <typename... Ix>
  double& operator()(Ix... ix) {
    const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
    return data_[offset(idx)];
  }
  template <typename... Ix>
  double operator()(Ix... ix) const {
    const std::size_t idx[] = {static_cast<std::size_t>(ix)...};
    return data_[offset(idx)];
  }

  // Reinterpret with a new shape of equal total size; data untouched.
  DenseTensor reshaped(std::vector<std::size_t> shape) const&;
  DenseTensor reshaped(std::vector<std::size_t> shape) &&;

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_str(std::span<const std::size_t> shape);

// Mode-1 contracted product: sum over the last mode of `a` and the first
// mode of `b`; generalizes the matrix product.
DenseTensor mode1_contract(const DenseTensor& a, const DenseTensor& b);

// Canonical matricization: the first `split` modes become rows (little-endian
// within each group), the rest columns. split in [0, order]. Zero-copy.
DenseTensor matricize_canonical(const DenseTensor& x, std::size_t split);

// Mode-n matricization (0-based mode): rows are mode-`mode` fibers' index,
// columns run over the remaining modes little-endian.
DenseTensor matricize_mode(const DenseTensor& x, std::size_t mode);

// vec(x): canonical matricization with all modes grouped into a single column.
DenseTensor vectorize(const DenseTensor& x);

// out[p] = in[q] with p[d] = q[perm[d]]: mode d of the result is mode perm[d]
// of the input.
DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> perm);
DenseTensor permute(const DenseTensor& x, std::initializer_list<std::size_t> perm);

// Pairwise contraction of modes `ma` of `a` against modes `mb` of `b`
// (matched in order, equal extents). Result carries the free modes of `a`
// followed by the free modes of `b`, each in original order.
DenseTensor contract(const DenseTensor& a, std::span<const std::size_t> ma,
                     const DenseTensor& b, std::span<const std::size_t> mb);
DenseTensor contract(const DenseTensor& a, std::initializer_list<std::size_t> ma,
                     const DenseTensor& b, std::initializer_list<std::size_t> mb);

// op(a) * op(b) for matrices.
DenseTensor matmul(const DenseTensor& a, const DenseTensor& b,
                   bool trans_a = false, bool trans_b = false);
DenseTensor transposed(const DenseTensor& m);
double fro_norm(const DenseTensor& t);

}  // namespace ttpinv
