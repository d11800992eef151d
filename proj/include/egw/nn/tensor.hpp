// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "egw/common/error.hpp"

namespace egw::nn {

using Eigen::Index;

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Shape = std::vector<Index>;

inline Index shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

/// Dense row-major tensor. The last dimension is the column count of the
/// backing matrix, so a [B,M,N] tensor is a (B*M) x N matrix and a [B,J]
/// tensor is B x J; both share the flat layout.
template <class Scalar = double>
class Tensor {
 public:
  using Matrix = RowMatrix<Scalar>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape();
    data_ = Matrix::Zero(rows_of(shape_), cols_of(shape_));
  }

  Tensor(Shape shape, Matrix data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    require(data_.rows() == rows_of(shape_) && data_.cols() == cols_of(shape_), ErrorKind::Shape,
            "tensor: data does not match shape " + shape_string(shape_));
  }

  /// Build from a flat sequence; rejects size mismatch and non-finite values.
  static Tensor from(Shape shape, const std::vector<Scalar>& flat) {
    require(shape_product(shape) == static_cast<Index>(flat.size()), ErrorKind::Shape,
            "tensor: " + std::to_string(flat.size()) + " values for shape " + shape_string(shape));
    Tensor t(std::move(shape));
    std::copy(flat.begin(), flat.end(), t.data_.data());
    require(t.all_finite(), ErrorKind::Parameter, "tensor: non-finite value");
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return data_.size(); }

  Matrix& matrix() { return data_; }
  const Matrix& matrix() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_.data()[i]; }
  Scalar operator[](Index i) const { return data_.data()[i]; }

  /// Element of a rank-3 tensor.
  Scalar& at(Index b, Index m, Index n) { return data_(b * shape_[1] + m, n); }
  Scalar at(Index b, Index m, Index n) const { return data_(b * shape_[1] + m, n); }

  std::vector<Scalar> flat() const { return {data_.data(), data_.data() + data_.size()}; }

  Tensor reshaped(Shape shape) const {
    require(shape_product(shape) == size(), ErrorKind::Shape,
            "tensor: cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    Matrix m = Eigen::Map<const Matrix>(data_.data(), rows_of(shape), cols_of(shape));
    return Tensor(std::move(shape), std::move(m));
  }

  bool all_finite() const { return data_.allFinite(); }

 private:
  static Index cols_of(const Shape& s) { return s.empty() ? 1 : s.back(); }
  static Index rows_of(const Shape& s) { return s.empty() ? 1 : shape_product(s) / std::max<Index>(s.back(), 1); }

  void check_shape() const {
    for (auto d : shape_) require(d >= 0, ErrorKind::Shape, "tensor: negative dimension");
  }

  Shape shape_;
  Matrix data_;
};

/// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace egw::nn
