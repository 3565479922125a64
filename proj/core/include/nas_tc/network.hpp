// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// NAS-TC layer (split into N channel groups -> one cell per group -> concat ->
// channel shuffle -> stride-2 temporal max-pool) and the stacked classifier.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "nas_tc/cell.hpp"

namespace nastc {

enum class TaskType { kMultiLabel, kSingleLabel };

std::string_view task_name(TaskType t);
std::optional<TaskType> task_from_name(std::string_view name);

struct NetworkConfig {
  // Backbone feature dims (defaults: I3D mixed-5c on 32 superframes).
  std::size_t channels = 1024;
  std::size_t timesteps = 32;
  std::size_t height = 7;
  std::size_t width = 7;

  std::size_t layers = 3;
  std::size_t groups = 8;
  std::size_t scale_s = 4;  // must equal the number of intermediate nodes
  std::size_t scale_m = 3;

  std::size_t hidden = 512;
  std::size_t classes = 157;
  TaskType task = TaskType::kMultiLabel;
  double dropout = 0.5;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// Throws ConfigError. `allow_no_layers` admits L = 0 (classifier only), which
// is meaningful for parameter accounting but not for a runnable network.
void validate_network_config(const NetworkConfig& cfg, bool allow_no_layers = false);

// floor((channels / groups) / m)
std::size_t cell_width(std::size_t channels, std::size_t groups, std::size_t m);

struct LayerShape {
  std::size_t in_channels;    // I_{k-1}
  std::size_t skip_channels;  // I_{k-2}
  std::size_t cell_width;     // per-group projection width
  std::size_t out_channels;   // N * S * cell_width
  std::size_t in_timesteps;
  std::size_t out_timesteps;
};

std::vector<LayerShape> layer_shapes(const NetworkConfig& cfg);

struct LayerConfig {
  std::size_t groups = 8;
  std::size_t scale_s = 4;
  std::size_t scale_m = 3;
  const Genotype* genotype = nullptr;  // nullptr selects the relaxed cell
  bool affine = true;
};

class NasTcLayer : public Module {
 public:
  NasTcLayer(const std::string& name, const LayerConfig& cfg, const LayerShape& shape,
             std::mt19937_64& rng);

  // `skip` is I_{k-2}; when its T is twice that of `x` it is max-pooled with
  // stride 2 first.
  Variable forward(const Variable& x, const Variable& skip, const ForwardContext& ctx,
                   std::span<const Variable> arch_weights = {});

  const LayerShape& shape() const { return shape_; }
  std::size_t groups() const { return cells_.size(); }
  Cell& cell(std::size_t g) { return *cells_.at(g); }

  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

 private:
  LayerShape shape_;
  std::vector<std::unique_ptr<Cell>> cells_;
};

class NasTcNetwork : public Module {
 public:
  // Discrete network, BatchNorm affine enabled.
  NasTcNetwork(const NetworkConfig& cfg, const Genotype& genotype, std::uint64_t seed);
  // Relaxed network over a shared, caller-owned arch; BatchNorm affine disabled.
  NasTcNetwork(const NetworkConfig& cfg, CellArch& arch, std::uint64_t seed);

  // Logits (N, K). `features` must be (N, C, T, H, W) matching the config.
  Variable forward(const Tensor& features, const ForwardContext& ctx);

  const NetworkConfig& config() const { return cfg_; }
  bool relaxed() const { return arch_ != nullptr; }
  CellArch* arch() { return arch_; }
  const Genotype& genotype() const { return genotype_; }
  std::size_t layer_count() const { return layers_.size(); }
  NasTcLayer& layer(std::size_t i) { return *layers_.at(i); }
  std::vector<Parameter*> classifier_parameters();

  // Network weights w only; arch parameters are never included.
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

 private:
  void build(std::mt19937_64& rng, bool affine);

  NetworkConfig cfg_;
  CellArch* arch_ = nullptr;
  Genotype genotype_;
  std::vector<std::unique_ptr<NasTcLayer>> layers_;
  Parameter hidden_w_;
  Parameter hidden_b_;
  Parameter out_w_;
  Parameter out_b_;
  std::mt19937_64 dropout_rng_;
};

// Analytic trainable-scalar counts.
std::size_t count_cell_parameters(std::size_t skip_channels, std::size_t in_channels,
                                  std::size_t width, const Genotype& genotype,
                                  bool affine = true);
std::size_t count_relaxed_cell_parameters(std::size_t skip_channels,
                                          std::size_t in_channels, std::size_t width,
                                          bool affine = false);
std::size_t count_classifier_parameters(const NetworkConfig& cfg);

struct ParameterCount {
  std::vector<std::size_t> layers;  // per TC layer
  std::size_t tc_layers = 0;        // sum of `layers`
  std::size_t classifier = 0;
  std::size_t total = 0;
};

ParameterCount count_parameters(const NetworkConfig& cfg, const Genotype& genotype,
                                bool affine = true);
ParameterCount count_relaxed_parameters(const NetworkConfig& cfg, bool affine = false);

}  // namespace nastc
