// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "nas_tc/autodiff.hpp"
#include "nas_tc/op_space.hpp"

namespace {

using namespace nastc;

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, 1.0);
  for (double& v : t.storage()) v = d(rng);
  return t;
}

// Depthwise temporal conv, forward and backward. Args: channels, timesteps, kernel.
void BM_DepthwiseTemporalConv(benchmark::State& state) {
  const std::size_t c = state.range(0), t = state.range(1), k = state.range(2);
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({8, c, t, 1, 1}, rng);
  Parameter w("w", random_tensor({c, 1, k}, rng));
  TemporalConvOptions opt;
  opt.groups = c;
  opt.kernel = k;
  opt.pad_left = k - 1;
  for (auto _ : state) {
    w.zero_grad();
    Variable y = temporal_conv(Variable::constant(x), Variable::leaf(w), opt);
    backward(sum(y));
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * c * t * k);
}
BENCHMARK(BM_DepthwiseTemporalConv)->Args({64, 32, 3})->Args({64, 32, 7})->Args({256, 32, 7});

void BM_PointwiseConv(benchmark::State& state) {
  const std::size_t c = state.range(0);
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({8, c, 32, 1, 1}, rng);
  Parameter w("w", random_tensor({c, c}, rng));
  for (auto _ : state) {
    w.zero_grad();
    backward(sum(pointwise_conv(Variable::constant(x), Variable::leaf(w))));
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * c * c * 32);
}
BENCHMARK(BM_PointwiseConv)->Arg(16)->Arg(64)->Arg(128);

// One op of the search space on a (8, C, 32) batch, forward only.
void BM_CandidateOpForward(benchmark::State& state) {
  const OpKind kind = static_cast<OpKind>(state.range(0));
  const std::size_t c = 32;
  std::mt19937_64 rng(3);
  auto op = build_op(kind, c, true, rng, "op");
  const Variable x = Variable::constant(random_tensor({8, c, 32, 1, 1}, rng));
  for (auto _ : state) benchmark::DoNotOptimize(op->forward(x, {}).value().data());
  state.SetLabel(std::string(op_name(kind)));
}
BENCHMARK(BM_CandidateOpForward)->DenseRange(0, static_cast<int>(kNumOps) - 1);

}  // namespace
