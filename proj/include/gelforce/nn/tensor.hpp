// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gelforce/error.hpp"

namespace gelforce::nn {

/// Dense NCHW tensor. Gradients live in separate tensors of the same shape.
template <typename T>
class Tensor {
 public:
  using Shape = std::array<int, 4>;
  using Scalar = T;
  using PlaneMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tensor() = default;
  explicit Tensor(const Shape& shape, T fill = T(0)) : shape_(shape) {
    for (int d : shape) {
      if (d < 0) throw ShapeError("negative tensor dimension in " + shape_string(shape));
    }
    data_.assign(count(shape), fill);
  }
  Tensor(int n, int c, int h, int w, T fill = T(0)) : Tensor(Shape{n, c, h, w}, fill) {}

  static std::size_t count(const Shape& s) {
    return static_cast<std::size_t>(s[0]) * s[1] * s[2] * s[3];
  }
  static std::string shape_string(const Shape& s) {
    return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) + "," +
           std::to_string(s[3]) + ")";
  }

  const Shape& shape() const { return shape_; }
  std::string shape_string() const { return shape_string(shape_); }
  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int h() const { return shape_[2]; }
  int w() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator()(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& operator()(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  /// Sample `n` as a C x (H*W) row-major matrix.
  Eigen::Map<PlaneMatrix> sample(int n) { return {data() + n * c() * plane(), c(), static_cast<Eigen::Index>(plane())}; }
  Eigen::Map<const PlaneMatrix> sample(int n) const {
    return {data() + n * c() * plane(), c(), static_cast<Eigen::Index>(plane())};
  }

  Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> flat() { return {data(), static_cast<Eigen::Index>(size())}; }
  Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> flat() const {
    return {data(), static_cast<Eigen::Index>(size())};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(T(0)); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.values().begin(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace gelforce::nn
