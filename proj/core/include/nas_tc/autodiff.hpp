// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode differentiation over the handful of primitives
// the temporal search space needs. Every forward call records a node; the
// graph is discarded once the last Variable referencing it goes away.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nas_tc/tensor.hpp"

namespace nastc {

// A trainable tensor with a same-shaped gradient accumulator. Optimizer state
// is keyed by the address of the Parameter, so Parameters must not move once
// handed to an optimizer.
class Parameter {
 public:
  Parameter(std::string name, Tensor value);

  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;

  const std::string& name() const noexcept { return name_; }
  Tensor& value() noexcept { return value_; }
  const Tensor& value() const noexcept { return value_; }
  Tensor& grad() noexcept { return grad_; }
  const Tensor& grad() const noexcept { return grad_; }
  std::size_t size() const noexcept { return value_.size(); }

  // A frozen parameter enters graphs as a constant and receives no gradient.
  bool frozen() const noexcept { return frozen_; }
  void set_frozen(bool frozen) noexcept { frozen_ = frozen; }

  void zero_grad();

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
  bool frozen_ = false;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  std::vector<NodePtr> inputs;
  BackwardFn backward_fn;
  Parameter* parameter = nullptr;
  bool requires_grad = false;
  const char* op = "constant";

  // Zero-initialised gradient buffer of value's shape.
  Tensor& grad_buffer();
};

class Variable {
 public:
  Variable() = default;
  explicit Variable(NodePtr node) : node_(std::move(node)) {}

  static Variable constant(Tensor value);
  // Leaf bound to `p`; backward() adds into p.grad().
  static Variable leaf(Parameter& p);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  const NodePtr& node() const noexcept { return node_; }

 private:
  NodePtr node_;
};

// Accumulates d(root)/d(p) into every reachable Parameter. `root` must hold a
// single element. Gradients accumulate; zero them between steps.
void backward(const Variable& root);

void zero_grad(std::span<Parameter* const> params);

// ---------------------------------------------------------------------------
// Primitives. Feature-map ops take rank-5 (N, C, T, H, W) inputs.
// ---------------------------------------------------------------------------

struct TemporalConvOptions {
  std::size_t kernel = 1;
  std::size_t dilation = 1;
  std::size_t groups = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

// Convolution along T only. `w` has shape (C_out, C_in / groups, kernel).
// Padding must keep T unchanged: pad_left + pad_right == dilation * (kernel - 1).
Variable temporal_conv(const Variable& x, const Variable& w,
                       const TemporalConvOptions& opt);

// 1x1 convolution across channels. `w` has shape (C_out, C_in).
Variable pointwise_conv(const Variable& x, const Variable& w);

Variable relu(const Variable& x);
Variable sigmoid(const Variable& x);

struct BatchNormState {
  explicit BatchNormState(std::size_t channels = 0);
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Per-channel standardisation over (N, T, H, W). `gamma`/`beta` may be
// undefined Variables for the non-affine form. Training mode uses batch
// statistics and updates `state`; eval mode uses the running statistics.
Variable batch_norm(const Variable& x, BatchNormState& state,
                    const Variable& gamma, const Variable& beta, bool training);

enum class PoolKind { kMax, kAvg };

// Sliding window over T. Stride 1 pads (kernel - 1) on the left so T is
// preserved; stride 2 uses no padding. Max pads with -inf; avg pads with 0 and
// always divides by `kernel`.
Variable pool_t(const Variable& x, PoolKind kind, std::size_t kernel,
                std::size_t stride);

// Rank-1 softmax with max subtraction.
Variable softmax(const Variable& v);

// sum_o weights[o] * xs[o]; `weights` is rank 1 with xs.size() entries.
Variable weighted_sum(std::span<const Variable> xs, const Variable& weights);

Variable concat_channels(std::span<const Variable> xs);
Variable slice_channels(const Variable& x, std::size_t begin, std::size_t count);

// Channel c = i * (C / groups) + j moves to position j * groups + i.
Variable channel_shuffle(const Variable& x, std::size_t groups);

Variable add(const Variable& a, const Variable& b);
Variable add_n(std::span<const Variable> xs);
Variable scale(const Variable& x, Scalar factor);
// Elementwise product of equal-shaped tensors.
Variable mul(const Variable& a, const Variable& b);

// (N, C, T, H, W) -> (N, C)
Variable global_avg_pool(const Variable& x);

// x: (N, D), w: (K, D), b: (K) -> (N, K)
Variable linear(const Variable& x, const Variable& w, const Variable& b);

// Inverted dropout; identity when !training or rate == 0.
Variable dropout(const Variable& x, double rate, std::mt19937_64& rng,
                 bool training);

Variable sum(const Variable& x);

// Mean over all N*K entries of the per-class binary cross-entropy.
Variable bce_with_logits(const Variable& logits, const Tensor& targets);

// Mean over N of -sum_k y_k log softmax(z)_k.
Variable softmax_cross_entropy(const Variable& logits, const Tensor& targets);

// Plain (non-differentiable) helpers used by evaluation.
std::vector<Scalar> softmax_values(std::span<const Scalar> v);

}  // namespace nastc
