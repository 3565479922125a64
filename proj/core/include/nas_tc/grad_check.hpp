// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of the analytic gradients.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nas_tc/autodiff.hpp"

namespace nastc {

struct GradCheckOptions {
  double h = 1e-5;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  // A coordinate whose one-sided differences disagree by more than
  // kink_tol * max(1, |central|) straddles a ReLU/max kink and is skipped.
  double kink_tol = 1e-3;
};

struct GradCheckStats {
  double rel_error = 0.0;  // max|a - n| / max(max|n|, max|a|, 1e-10)
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// Compares backward() of `loss` against central differences over every
// coordinate of `params`. `loss` must rebuild the graph from current values.
GradCheckStats check_gradients(const std::function<Variable()>& loss,
                               std::span<Parameter* const> params,
                               const GradCheckOptions& opt);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;  // over all trials
  std::size_t trials = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// Every candidate op, the softmax-mixed edge (gradients in x, weights and
// alpha), and the underlying primitives, each on opt.trials random tensors no
// larger than (4, 8, 8, 2, 2).
std::vector<GradCheckResult> run_grad_check_suite(const GradCheckOptions& opt);

}  // namespace nastc
