// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/op_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nas_tc/errors.hpp"

namespace nastc {

namespace {

constexpr std::array<OpSpec, kNumOps> kOpTable{{
    {OpKind::kIdentity, "identity", 0, 0, GroupsRule::kUnspecified, 0},
    {OpKind::kZero, "zero", 0, 0, GroupsRule::kUnspecified, 0},
    {OpKind::kAvgPool2, "avg_pool_2", 2, 0, GroupsRule::kUnspecified, 1},
    {OpKind::kMaxPool2, "max_pool_2", 2, 0, GroupsRule::kUnspecified, 1},
    {OpKind::kDilConvK3, "dil_conv_k3", 3, 2, GroupsRule::kPerChannel, 2},
    {OpKind::kDilConvK5, "dil_conv_k5", 5, 2, GroupsRule::kPerChannel, 4},
    {OpKind::kSepConvK3, "sep_conv_k3", 3, 1, GroupsRule::kUnspecified, 1},
    {OpKind::kSepConvK5, "sep_conv_k5", 5, 1, GroupsRule::kUnspecified, 2},
    {OpKind::kSepConvK7, "sep_conv_k7", 7, 1, GroupsRule::kUnspecified, 3},
}};

class IdentityOp final : public Block {
 public:
  Variable forward(const Variable& x, const ForwardContext&) override { return x; }
  OpKind kind() const override { return OpKind::kIdentity; }
  void collect_parameters(std::vector<Parameter*>&) override {}
};

class ZeroOp final : public Block {
 public:
  Variable forward(const Variable& x, const ForwardContext&) override {
    return Variable::constant(Tensor(x.shape()));
  }
  OpKind kind() const override { return OpKind::kZero; }
  void collect_parameters(std::vector<Parameter*>&) override {}
};

class PoolOp final : public Block {
 public:
  explicit PoolOp(OpKind kind) : kind_(kind) {}
  Variable forward(const Variable& x, const ForwardContext&) override {
    return pool_t(x, kind_ == OpKind::kMaxPool2 ? PoolKind::kMax : PoolKind::kAvg,
                  2, 1);
  }
  OpKind kind() const override { return kind_; }
  void collect_parameters(std::vector<Parameter*>&) override {}

 private:
  OpKind kind_;
};

// SepConv stacks two dilation-1 units; DilConv is a single dilated unit.
class ConvOp final : public Block {
 public:
  ConvOp(OpKind kind, std::size_t channels, bool affine, std::mt19937_64& rng,
         const std::string& name)
      : kind_(kind) {
    const OpSpec& spec = op_spec(kind);
    const int units = op_unit_count(kind);
    for (int u = 0; u < units; ++u) {
      units_.push_back(std::make_unique<ConvUnit>(
          name + ".unit" + std::to_string(u), channels,
          static_cast<std::size_t>(spec.kernel),
          static_cast<std::size_t>(spec.dilation), affine, rng));
    }
  }

  Variable forward(const Variable& x, const ForwardContext& ctx) override {
    Variable y = x;
    for (auto& unit : units_) y = unit->forward(y, ctx);
    return y;
  }
  OpKind kind() const override { return kind_; }

  void collect_parameters(std::vector<Parameter*>& out) override {
    for (auto& unit : units_) unit->collect_parameters(out);
  }
  void collect_buffers(std::vector<NamedTensor>& out) override {
    for (auto& unit : units_) unit->collect_buffers(out);
  }

 private:
  OpKind kind_;
  std::vector<std::unique_ptr<ConvUnit>> units_;
};

}  // namespace

const std::array<OpSpec, kNumOps>& op_table() { return kOpTable; }

const OpSpec& op_spec(OpKind kind) { return kOpTable.at(op_index(kind)); }

std::string_view op_name(OpKind kind) { return op_spec(kind).name; }

std::optional<OpKind> op_from_name(std::string_view name) {
  for (const OpSpec& spec : kOpTable) {
    if (spec.name == name) return spec.kind;
  }
  return std::nullopt;
}

int op_unit_count(OpKind kind) {
  switch (kind) {
    case OpKind::kSepConvK3:
    case OpKind::kSepConvK5:
    case OpKind::kSepConvK7:
      return 2;
    case OpKind::kDilConvK3:
    case OpKind::kDilConvK5:
      return 1;
    default:
      return 0;
  }
}

std::size_t op_parameter_count(OpKind kind, std::size_t channels, bool affine) {
  const auto k = static_cast<std::size_t>(op_spec(kind).kernel);
  const std::size_t unit = channels * k + channels * channels + (affine ? 2 * channels : 0);
  return static_cast<std::size_t>(op_unit_count(kind)) * unit;
}

ConvUnit::ConvUnit(const std::string& name, std::size_t channels,
                   std::size_t kernel, std::size_t dilation, bool affine,
                   std::mt19937_64& rng)
    : conv_{kernel, dilation, channels, dilation * (kernel - 1) / 2,
            dilation * (kernel - 1) - dilation * (kernel - 1) / 2},
      depthwise_(name + ".depthwise", Tensor({channels, 1, kernel})),
      pointwise_(name + ".pointwise", Tensor({channels, channels})),
      bn_(name + ".bn", channels, affine) {
  kaiming_uniform(depthwise_.value(), kernel, rng);
  kaiming_uniform(pointwise_.value(), channels, rng);
}

Variable ConvUnit::forward(const Variable& x, const ForwardContext& ctx) {
  Variable y = relu(x);
  y = temporal_conv(y, Variable::leaf(depthwise_), conv_);
  y = pointwise_conv(y, Variable::leaf(pointwise_));
  return bn_.forward(y, ctx);
}

void ConvUnit::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&depthwise_);
  out.push_back(&pointwise_);
  bn_.collect_parameters(out);
}

void ConvUnit::collect_buffers(std::vector<NamedTensor>& out) {
  bn_.collect_buffers(out);
}

std::unique_ptr<Block> build_op(OpKind kind, std::size_t channels, bool affine,
                                std::mt19937_64& rng, const std::string& name) {
  if (channels == 0) throw ConfigError("build_op: channel count must be >= 1");
  switch (kind) {
    case OpKind::kIdentity:
      return std::make_unique<IdentityOp>();
    case OpKind::kZero:
      return std::make_unique<ZeroOp>();
    case OpKind::kAvgPool2:
    case OpKind::kMaxPool2:
      return std::make_unique<PoolOp>(kind);
    case OpKind::kDilConvK3:
    case OpKind::kDilConvK5:
    case OpKind::kSepConvK3:
    case OpKind::kSepConvK5:
    case OpKind::kSepConvK7:
      return std::make_unique<ConvOp>(kind, channels, affine, rng, name);
  }
  throw ConfigError("build_op: unknown operation kind " +
                    std::to_string(static_cast<int>(kind)));
}

Variable mixed_forward(const Variable& x, const Variable& weights,
                       std::span<Block* const> ops, const ForwardContext& ctx) {
  if (!weights.defined() || weights.value().rank() != 1 ||
      weights.value().size() != ops.size()) {
    throw ConfigError("mixed_forward: " + std::to_string(ops.size()) +
                      " ops but " +
                      (weights.defined() ? std::to_string(weights.value().size())
                                         : std::string("no")) +
                      " mixing weights");
  }
  std::vector<Variable> outs;
  outs.reserve(ops.size());
  for (Block* op : ops) outs.push_back(op->forward(x, ctx));
  return weighted_sum(outs, weights);
}

MixedEdge::MixedEdge(const std::string& name, std::size_t channels, bool affine,
                     std::mt19937_64& rng) {
  for (const OpSpec& spec : kOpTable) {
    ops_.push_back(build_op(spec.kind, channels, affine, rng,
                            name + "." + std::string(spec.name)));
    raw_.push_back(ops_.back().get());
  }
}

Variable MixedEdge::forward(const Variable& x, const Variable& weights,
                            const ForwardContext& ctx) {
  return mixed_forward(x, weights, raw_, ctx);
}

void MixedEdge::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& op : ops_) op->collect_parameters(out);
}

void MixedEdge::collect_buffers(std::vector<NamedTensor>& out) {
  for (auto& op : ops_) op->collect_buffers(out);
}

EdgeChoice discretize_edge(std::span<const double> alpha) {
  if (alpha.size() != kNumOps) {
    throw ConfigError("discretize_edge: expected " + std::to_string(kNumOps) +
                      " weights, got " + std::to_string(alpha.size()));
  }
  // Softmax with the normaliser summed in sorted order, so rows that are
  // permutations or shifts of each other give bitwise-equal strengths and
  // edge ranking ties resolve by predecessor index as documented.
  const double top = *std::max_element(alpha.begin(), alpha.end());
  std::vector<double> w(kNumOps);
  for (std::size_t o = 0; o < kNumOps; ++o) w[o] = std::exp(alpha[o] - top);
  std::vector<double> sorted = w;
  std::sort(sorted.begin(), sorted.end());
  const double z = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  for (double& v : w) v /= z;
  std::size_t best = kNumOps;
  for (std::size_t o = 0; o < kNumOps; ++o) {
    if (static_cast<OpKind>(o) == OpKind::kZero) continue;
    if (best == kNumOps || w[o] > w[best]) best = o;
  }
  return {static_cast<OpKind>(best), w[best]};
}

}  // namespace nastc
