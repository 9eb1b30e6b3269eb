/*
 * Copyright 2026 The Insight Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "insight/common.hpp"

namespace insight {

template <typename T>
concept Real = std::floating_point<T>;

/// Dense row-major tensor of rank 1..4 (last axis fastest).
template <Real T>
class Tensor {
 public:
  using value_type = T;
  static constexpr std::size_t kMaxRank = 4;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0)) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(count(shape_), fill);
  }

  Tensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != count(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape product " + std::to_string(count(shape_)));
    }
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  template <Real U>
  static Tensor cast(const Tensor<U>& other) {
    std::vector<T> out(other.data().begin(), other.data().end());
    return Tensor(other.shape(), std::move(out));
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // Rank-3 (channel, row, col) accessors; the common case for feature maps.
  T& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  /// Contiguous view of one leading-axis slice (e.g. one channel plane).
  std::span<T> slice(std::size_t i) {
    const std::size_t stride = data_.size() / shape_[0];
    return std::span<T>(data_).subspan(i * stride, stride);
  }
  std::span<const T> slice(std::size_t i) const {
    const std::size_t stride = data_.size() / shape_[0];
    return std::span<const T>(data_).subspan(i * stride, stride);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(*this, other, "tensor +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  static void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (a.shape_ != b.shape_) {
      throw DimensionError(std::string(where) + ": shape mismatch " + shape_string(a.shape_) +
                           " vs " + shape_string(b.shape_));
    }
  }

  static std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += "x";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }

 private:
  static std::size_t count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  static void check_shape(const std::vector<std::size_t>& s) {
    if (s.empty() || s.size() > kMaxRank) {
      throw DimensionError("tensor rank must be in [1, 4], got " + std::to_string(s.size()));
    }
    for (auto e : s) {
      if (e == 0) throw DimensionError("tensor extents must be positive: " + shape_string(s));
    }
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

/// A learnable value with an additively accumulated gradient of the same shape.
template <Real T>
struct GradPair {
  Tensor<T> value;
  Tensor<T> grad;

  GradPair() = default;
  explicit GradPair(Tensor<T> v) : value(std::move(v)), grad(Tensor<T>::zeros_like(value)) {}

  void zero_grad() { grad.zero(); }
  std::size_t size() const noexcept { return value.size(); }
};

}  // namespace insight
