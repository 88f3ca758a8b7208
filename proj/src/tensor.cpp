// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "seq2graph/error.hpp"

namespace seq2graph {

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() > kMaxRank) {
    throw ContractViolation("shape rank " + std::to_string(dims.size()) + " exceeds " +
                            std::to_string(kMaxRank));
  }
  for (std::size_t d : dims) {
    if (d == 0) throw ContractViolation("shape extents must be positive");
  }
  std::copy(dims.begin(), dims.end(), dims_.begin());
  rank_ = dims.size();
}

std::size_t Shape::numel() const {
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::string Shape::str() const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) out << 'x';
    out << dims_[i];
  }
  out << ']';
  return out.str();
}

bool operator==(const Shape& a, const Shape& b) {
  if (a.rank_ != b.rank_) return false;
  return std::equal(a.dims_.begin(), a.dims_.begin() + a.rank_, b.dims_.begin());
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (shape_.numel() != values_.size()) {
    throw ContractViolation("tensor shape " + shape_.str() + " holds " +
                            std::to_string(shape_.numel()) + " values, got " +
                            std::to_string(values_.size()));
  }
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), values_(shape.numel(), fill) {}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace seq2graph
