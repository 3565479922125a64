// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/module.hpp"

#include <cmath>

namespace nastc {

std::vector<Parameter*> Module::parameters() {
  std::vector<Parameter*> out;
  collect_parameters(out);
  return out;
}

std::vector<NamedTensor> Module::buffers() {
  std::vector<NamedTensor> out;
  collect_buffers(out);
  return out;
}

std::size_t Module::parameter_count() {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->size();
  return n;
}

BatchNorm::BatchNorm(std::string name, std::size_t channels, bool affine)
    : name_(std::move(name)), state_(channels) {
  if (affine) {
    gamma_ = std::make_unique<Parameter>(name_ + ".gamma", Tensor({channels}, 1.0));
    beta_ = std::make_unique<Parameter>(name_ + ".beta", Tensor({channels}, 0.0));
  }
}

Variable BatchNorm::forward(const Variable& x, const ForwardContext& ctx) {
  Variable gamma, beta;
  if (gamma_) {
    gamma = Variable::leaf(*gamma_);
    beta = Variable::leaf(*beta_);
  }
  return batch_norm(x, state_, gamma, beta, ctx.training);
}

void BatchNorm::collect_parameters(std::vector<Parameter*>& out) {
  if (gamma_) {
    out.push_back(gamma_.get());
    out.push_back(beta_.get());
  }
}

void BatchNorm::collect_buffers(std::vector<NamedTensor>& out) {
  out.push_back({name_ + ".running_mean", &state_.running_mean});
  out.push_back({name_ + ".running_var", &state_.running_var});
}

void kaiming_uniform(Tensor& w, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : w.data()) v = dist(rng);
}

}  // namespace nastc
