#include "ttpinv/dense.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ttpinv/kernels.hpp"

namespace ttpinv {

namespace {

std::size_t product(std::span<const std::size_t> v) {
  std::size_t p = 1;
  for (std::size_t d : v) p *= d;
  return p;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {
  for (std::size_t d : shape_)
    if (d == 0) throw std::invalid_argument("DenseTensor: zero extent");
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_))
    throw std::invalid_argument("DenseTensor: data size " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_str());
}

DenseTensor DenseTensor::matrix(std::size_t rows, std::size_t cols) {
  return DenseTensor({rows, cols});
}

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor m({n, n});
  for (std::size_t i = 0; i < n; ++i) m.data_[i + n * i] = 1.0;
  return m;
}

std::size_t DenseTensor::rows() const {
  if (order() != 2) throw std::invalid_argument("rows(): tensor is not a matrix");
  return shape_[0];
}

std::size_t DenseTensor::cols() const {
  if (order() != 2) throw std::invalid_argument("cols(): tensor is not a matrix");
  return shape_[1];
}

std::size_t DenseTensor::offset(std::span<const std::size_t> idx) const {
  std::size_t off = 0, stride = 1;
  for (std::size_t d = 0; d < shape_.size(); ++d) {
    off += idx[d] * stride;
    stride *= shape_[d];
  }
  return off;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) const& {
  if (product(shape) != data_.size())
    throw std::invalid_argument("reshape: size mismatch, " + shape_str() +
                                " -> " + ttpinv::shape_str(shape));
  return DenseTensor(std::move(shape), data_);
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) && {
  if (product(shape) != data_.size())
    throw std::invalid_argument("reshape: size mismatch, " + shape_str() +
                                " -> " + ttpinv::shape_str(shape));
  return DenseTensor(std::move(shape), std::move(data_));
}

std::string DenseTensor::shape_str() const { return ttpinv::shape_str(shape_); }

std::string shape_str(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t d = 0; d < shape.size(); ++d)
    os << shape[d] << (d + 1 < shape.size() ? "x" : "");
  os << ')';
  return os.str();
}

DenseTensor mode1_contract(const DenseTensor& a, const DenseTensor& b) {
  if (a.order() < 1 || b.order() < 1)
    throw std::invalid_argument("mode1_contract: operands must have order >= 1");
  const std::size_t shared_a = a.shape().back();
  const std::size_t shared_b = b.shape().front();
  if (shared_a != shared_b)
    throw std::invalid_argument("mode1_contract: trailing mode of " +
                                a.shape_str() + " does not match leading mode of " +
                                b.shape_str());
  std::vector<std::size_t> out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.insert(out_shape.end(), b.shape().begin() + 1, b.shape().end());
  const std::size_t m = a.size() / shared_a;
  const std::size_t n = b.size() / shared_b;
  DenseTensor out(std::move(out_shape));  // empty shape -> scalar
  kernels::gemm(false, false, m, n, shared_a, 1.0, a.data(), m, b.data(),
                shared_b, 0.0, out.data(), m);
  return out;
}

DenseTensor matricize_canonical(const DenseTensor& x, std::size_t split) {
  if (split > x.order())
    throw std::invalid_argument("matricize_canonical: split " +
                                std::to_string(split) + " out of range for " +
                                x.shape_str());
  std::size_t r = 1;
  for (std::size_t d = 0; d < split; ++d) r *= x.dim(d);
  return x.reshaped({r, x.size() / r});
}

DenseTensor matricize_mode(const DenseTensor& x, std::size_t mode) {
  if (mode >= x.order())
    throw std::invalid_argument("matricize_mode: mode " + std::to_string(mode) +
                                " out of range for " + x.shape_str());
  std::vector<std::size_t> perm;
  perm.push_back(mode);
  for (std::size_t d = 0; d < x.order(); ++d)
    if (d != mode) perm.push_back(d);
  DenseTensor p = permute(x, perm);
  const std::size_t r = x.dim(mode);
  return std::move(p).reshaped({r, x.size() / r});
}

DenseTensor vectorize(const DenseTensor& x) {
  return x.reshaped({x.size(), std::size_t{1}});
}

DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> perm) {
  const std::size_t nd = x.order();
  if (perm.size() != nd)
    throw std::invalid_argument("permute: permutation length mismatch");
  bool identity = true;
  std::vector<std::size_t> out_shape(nd);
  std::vector<bool> seen(nd, false);
  for (std::size_t d = 0; d < nd; ++d) {
    if (perm[d] >= nd || seen[perm[d]])
      throw std::invalid_argument("permute: invalid permutation");
    seen[perm[d]] = true;
    out_shape[d] = x.dim(perm[d]);
    identity = identity && perm[d] == d;
  }
  if (identity) return x;

  DenseTensor out(out_shape);
  // Stride of output mode d in the input buffer.
  std::vector<std::size_t> in_stride(nd, 1);
  {
    std::vector<std::size_t> s(nd, 1);
    for (std::size_t d = 1; d < nd; ++d) s[d] = s[d - 1] * x.dim(d - 1);
    for (std::size_t d = 0; d < nd; ++d) in_stride[d] = s[perm[d]];
  }
  std::vector<std::size_t> idx(nd, 0);
  const double* src = x.data();
  double* dst = out.data();
  const std::size_t total = x.size();
  std::size_t in_off = 0;
  for (std::size_t lin = 0; lin < total; ++lin) {
    dst[lin] = src[in_off];
    for (std::size_t d = 0; d < nd; ++d) {
      in_off += in_stride[d];
      if (++idx[d] < out_shape[d]) break;
      in_off -= in_stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  return out;
}

DenseTensor permute(const DenseTensor& x, std::initializer_list<std::size_t> perm) {
  return permute(x, std::span<const std::size_t>(perm.begin(), perm.size()));
}

DenseTensor contract(const DenseTensor& a, std::span<const std::size_t> ma,
                     const DenseTensor& b, std::span<const std::size_t> mb) {
  if (ma.size() != mb.size())
    throw std::invalid_argument("contract: mode list length mismatch");
  const std::size_t nc = ma.size();
  for (std::size_t i = 0; i < nc; ++i) {
    if (ma[i] >= a.order() || mb[i] >= b.order())
      throw std::invalid_argument("contract: mode out of range");
    if (a.dim(ma[i]) != b.dim(mb[i]))
      throw std::invalid_argument(
          "contract: extent mismatch on mode pair (" + std::to_string(ma[i]) +
          "," + std::to_string(mb[i]) + "): " + a.shape_str() + " vs " +
          b.shape_str());
  }

  std::vector<bool> a_contracted(a.order(), false), b_contracted(b.order(), false);
  for (std::size_t i = 0; i < nc; ++i) {
    a_contracted[ma[i]] = true;
    b_contracted[mb[i]] = true;
  }

  std::vector<std::size_t> pa, pb;
  std::vector<std::size_t> out_shape;
  for (std::size_t d = 0; d < a.order(); ++d)
    if (!a_contracted[d]) {
      pa.push_back(d);
      out_shape.push_back(a.dim(d));
    }
  pa.insert(pa.end(), ma.begin(), ma.end());
  pb.insert(pb.end(), mb.begin(), mb.end());
  for (std::size_t d = 0; d < b.order(); ++d)
    if (!b_contracted[d]) {
      pb.push_back(d);
      out_shape.push_back(b.dim(d));
    }

  DenseTensor ap = permute(a, pa);
  DenseTensor bp = permute(b, pb);
  std::size_t k = 1;
  for (std::size_t i = 0; i < nc; ++i) k *= a.dim(ma[i]);
  const std::size_t m = a.size() / k;
  const std::size_t n = b.size() / k;

  DenseTensor out(std::move(out_shape));  // empty shape -> scalar
  kernels::gemm(false, false, m, n, k, 1.0, ap.data(), m, bp.data(), k, 0.0,
                out.data(), m);
  return out;
}

DenseTensor contract(const DenseTensor& a, std::initializer_list<std::size_t> ma,
                     const DenseTensor& b, std::initializer_list<std::size_t> mb) {
  return contract(a, std::span<const std::size_t>(ma.begin(), ma.size()), b,
                  std::span<const std::size_t>(mb.begin(), mb.size()));
}

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b, bool trans_a,
                   bool trans_b) {
  if (a.order() != 2 || b.order() != 2)
    throw std::invalid_argument("matmul: operands must be matrices");
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t ka = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (ka != kb)
    throw std::invalid_argument("matmul: inner dimensions differ, " +
                                a.shape_str() + " vs " + b.shape_str());
  DenseTensor c({m, n});
  kernels::gemm(trans_a, trans_b, m, n, ka, 1.0, a.data(), a.rows(), b.data(),
                b.rows(), 0.0, c.data(), m);
  return c;
}

DenseTensor transposed(const DenseTensor& m) {
  if (m.order() != 2) throw std::invalid_argument("transposed: not a matrix");
  return permute(m, {1, 0});
}

double fro_norm(const DenseTensor& t) {
  return std::sqrt(kernels::nrm2sq(t.size(), t.data()));
}

}  // namespace ttpinv
