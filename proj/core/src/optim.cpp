// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/optim.hpp"

#include <cmath>
#include <numbers>

namespace nastc {

Sgd::Sgd(std::vector<Parameter*> params, SgdOptions options)
    : params_(std::move(params)), options_(options) {}

void Sgd::zero_grad() { nastc::zero_grad(params_); }

void Sgd::step() {
  for (Parameter* p : params_) {
    Tensor& w = p->value();
    const Tensor& g = p->grad();
    Tensor* vel = nullptr;
    if (options_.momentum != 0) {
      auto [it, inserted] = velocity_.try_emplace(p, w.shape());
      vel = &it->second;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      double d = g[i] + options_.weight_decay * w[i];
      if (vel != nullptr) {
        (*vel)[i] = options_.momentum * (*vel)[i] + d;
        d = (*vel)[i];
      }
      w[i] -= options_.lr * d;
    }
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {}

void Adam::zero_grad() { nastc::zero_grad(params_); }

void Adam::step() {
  const double b1 = options_.beta1, b2 = options_.beta2;
  for (Parameter* p : params_) {
    Tensor& w = p->value();
    const Tensor& g = p->grad();
    auto [it, inserted] = state_.try_emplace(p);
    State& s = it->second;
    if (inserted) {
      s.m = Tensor(w.shape());
      s.v = Tensor(w.shape());
    }
    ++s.steps;
    const double c1 = 1 - std::pow(b1, static_cast<double>(s.steps));
    const double c2 = 1 - std::pow(b2, static_cast<double>(s.steps));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = g[i] + options_.weight_decay * w[i];
      s.m[i] = b1 * s.m[i] + (1 - b1) * d;
      s.v[i] = b2 * s.v[i] + (1 - b2) * d * d;
      const double m_hat = s.m[i] / c1;
      const double v_hat = s.v[i] / c2;
      w[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

double cosine_lr(double base, double floor, int epoch, int total) {
  if (total <= 0) return base;
  const double frac = static_cast<double>(epoch) / static_cast<double>(total);
  return floor + 0.5 * (base - floor) * (1 + std::cos(std::numbers::pi * frac));
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0;
  for (const Parameter* p : params) {
    for (double g : p->grad().data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double f = max_norm / (norm + 1e-6);
    for (Parameter* p : params) {
      for (double& g : p->grad().data()) g *= f;
    }
  }
  return norm;
}

}  // namespace nastc
