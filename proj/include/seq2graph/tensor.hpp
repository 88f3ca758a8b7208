// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace seq2graph {

/// Dimensions of a dense tensor. Rank is capped at kMaxRank; every extent is positive.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  std::size_t numel() const;

  // Matrix view: rank-1 shapes are columns.
  std::size_t rows() const { return rank_ == 0 ? 1 : dims_[0]; }
  std::size_t cols() const { return rank_ < 2 ? 1 : dims_[1]; }

  std::vector<std::size_t> dims() const { return {dims_.begin(), dims_.begin() + rank_}; }
  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b);

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

/// Dense row-major array of doubles.
class Tensor {
 public:
  /// A rank-0 zero.
  Tensor() : values_(1, 0.0) {}
  Tensor(Shape shape, std::vector<double> values);
  explicit Tensor(Shape shape, double fill = 0.0);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value) { return vector({value}); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.rows(); }
  std::size_t cols() const { return shape_.cols(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

}  // namespace seq2graph
