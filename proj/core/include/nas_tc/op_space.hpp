// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// The nine candidate temporal operations and the softmax-mixed edge.

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nas_tc/module.hpp"

namespace nastc {

enum class OpKind : int {
  kIdentity = 0,
  kZero,
  kAvgPool2,
  kMaxPool2,
  kDilConvK3,
  kDilConvK5,
  kSepConvK3,
  kSepConvK5,
  kSepConvK7,
};

inline constexpr std::size_t kNumOps = 9;

// "-" entries of the operation table are stored as 0 / kUnspecified.
enum class GroupsRule { kUnspecified, kPerChannel };

struct OpSpec {
  OpKind kind;
  std::string_view name;  // canonical genotype string
  int kernel;             // temporal extent of (k, 1, 1)
  int dilation;
  GroupsRule groups;
  int padding;            // temporal entry of the padding triple
};

const std::array<OpSpec, kNumOps>& op_table();
const OpSpec& op_spec(OpKind kind);
std::string_view op_name(OpKind kind);
std::optional<OpKind> op_from_name(std::string_view name);
inline std::size_t op_index(OpKind kind) { return static_cast<std::size_t>(kind); }

// Number of stacked ReLU-Conv-BN units (2 for SepConv, 1 for DilConv, 0 else).
int op_unit_count(OpKind kind);

// Trainable scalars of one op at width `channels`.
std::size_t op_parameter_count(OpKind kind, std::size_t channels, bool affine);

class Block : public Module {
 public:
  virtual Variable forward(const Variable& x, const ForwardContext& ctx) = 0;
  virtual OpKind kind() const = 0;
};

// ReLU -> depthwise temporal conv (k, 1, 1) -> pointwise 1x1 -> BatchNorm.
class ConvUnit : public Module {
 public:
  ConvUnit(const std::string& name, std::size_t channels, std::size_t kernel,
           std::size_t dilation, bool affine, std::mt19937_64& rng);

  Variable forward(const Variable& x, const ForwardContext& ctx);

  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

 private:
  TemporalConvOptions conv_;
  Parameter depthwise_;
  Parameter pointwise_;
  BatchNorm bn_;
};

// Builds one of the nine candidate operations for `channels` channels.
std::unique_ptr<Block> build_op(OpKind kind, std::size_t channels, bool affine,
                                std::mt19937_64& rng, const std::string& name);

// sum_o weights[o] * ops[o](x); `weights` must hold ops.size() entries.
Variable mixed_forward(const Variable& x, const Variable& weights,
                       std::span<Block* const> ops, const ForwardContext& ctx);

// All nine candidate ops on one edge.
class MixedEdge : public Module {
 public:
  MixedEdge(const std::string& name, std::size_t channels, bool affine,
            std::mt19937_64& rng);

  Variable forward(const Variable& x, const Variable& weights,
                   const ForwardContext& ctx);
  Block& op(OpKind kind) { return *ops_[op_index(kind)]; }

  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

 private:
  std::vector<std::unique_ptr<Block>> ops_;
  std::vector<Block*> raw_;
};

struct EdgeChoice {
  OpKind op;
  double strength;  // softmax weight of `op` over all nine candidates
};

// Strongest non-Zero op of an edge; ties go to the lower op index.
EdgeChoice discretize_edge(std::span<const double> alpha);

}  // namespace nastc
