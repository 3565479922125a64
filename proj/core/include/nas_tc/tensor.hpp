// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nastc {

using Scalar = double;
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. Rank-5 tensors are feature maps laid out as
// (batch, channels, timesteps, height, width).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = 0);
  Tensor(Shape shape, std::vector<Scalar> data);

  static Tensor feature(std::size_t n, std::size_t c, std::size_t t,
                        std::size_t h = 1, std::size_t w = 1, Scalar fill = 0);
  static Tensor vector(std::initializer_list<Scalar> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return shape_.empty(); }

  std::span<Scalar> data() noexcept { return data_; }
  std::span<const Scalar> data() const noexcept { return data_; }
  std::vector<Scalar>& storage() noexcept { return data_; }
  const std::vector<Scalar>& storage() const noexcept { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  Scalar operator[](std::size_t i) const { return data_[i]; }

  void fill(Scalar value);
  bool all_finite() const noexcept;
  Scalar max_abs() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<Scalar> data_;
};

// Unpacked extents of a rank-5 feature tensor.
struct FeatureDims {
  std::size_t n = 0, c = 0, t = 0, h = 0, w = 0;

  std::size_t spatial() const noexcept { return h * w; }
  std::size_t plane() const noexcept { return t * h * w; }
  Shape shape() const { return {n, c, t, h, w}; }
};

// Throws ConfigError unless `x` is rank 5.
FeatureDims feature_dims(const Tensor& x, const char* what = "feature tensor");

}  // namespace nastc
