// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "nas_tc/autodiff.hpp"

namespace nastc {

struct SgdOptions {
  double lr = 0.025;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

// SGD with heavy-ball momentum; weight decay is added to the gradient.
class Sgd {
 public:
  Sgd(std::vector<Parameter*> params, SgdOptions options);

  void step();
  void zero_grad();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  SgdOptions options_;
  std::unordered_map<const Parameter*, Tensor> velocity_;
};

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-4;
  double weight_decay = 0.0;
};

// Adam with bias correction; weight decay is L2 added to the gradient.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void step();
  void zero_grad();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  struct State {
    Tensor m;
    Tensor v;
    std::int64_t steps = 0;
  };
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::unordered_map<const Parameter*, State> state_;
};

// Cosine annealing from `base` to `floor` over `total` epochs.
double cosine_lr(double base, double floor, int epoch, int total);

// Rescales gradients so their joint L2 norm is at most `max_norm`. Returns
// the norm before clipping.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace nastc
