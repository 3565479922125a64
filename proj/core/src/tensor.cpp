// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "nas_tc/errors.hpp"

namespace nastc {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, Scalar fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Scalar> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::feature(std::size_t n, std::size_t c, std::size_t t,
                       std::size_t h, std::size_t w, Scalar fill) {
  return Tensor({n, c, t, h, w}, fill);
}

Tensor Tensor::vector(std::initializer_list<Scalar> values) {
  return Tensor({values.size()}, std::vector<Scalar>(values));
}

void Tensor::fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](Scalar v) { return std::isfinite(v); });
}

Scalar Tensor::max_abs() const noexcept {
  Scalar m = 0;
  for (Scalar v : data_) m = std::max(m, std::abs(v));
  return m;
}

FeatureDims feature_dims(const Tensor& x, const char* what) {
  if (x.rank() != 5) {
    throw ConfigError(std::string(what) + " must be rank 5 (N, C, T, H, W), got " +
                      shape_string(x.shape()));
  }
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), x.dim(4)};
}

}  // namespace nastc
