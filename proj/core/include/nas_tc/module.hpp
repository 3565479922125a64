// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "nas_tc/autodiff.hpp"

namespace nastc {

// Non-trainable state that still needs to be saved with the weights
// (BatchNorm running statistics).
struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct ForwardContext {
  bool training = true;
  std::mt19937_64* rng = nullptr;  // required only when dropout is active
};

class Module {
 public:
  virtual ~Module() = default;

  virtual void collect_parameters(std::vector<Parameter*>& out) = 0;
  virtual void collect_buffers(std::vector<NamedTensor>& out) { (void)out; }

  std::vector<Parameter*> parameters();
  std::vector<NamedTensor> buffers();
  // Number of trainable scalars.
  std::size_t parameter_count();
};

class BatchNorm : public Module {
 public:
  BatchNorm(std::string name, std::size_t channels, bool affine);

  Variable forward(const Variable& x, const ForwardContext& ctx);

  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

  bool affine() const { return gamma_ != nullptr; }
  BatchNormState& state() { return state_; }

 private:
  std::string name_;
  BatchNormState state_;
  std::unique_ptr<Parameter> gamma_;
  std::unique_ptr<Parameter> beta_;
};

// He/Kaiming uniform: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
void kaiming_uniform(Tensor& w, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace nastc
