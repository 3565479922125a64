// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/network.hpp"

#include <cmath>

#include "nas_tc/errors.hpp"

namespace nastc {

std::string_view task_name(TaskType t) {
  return t == TaskType::kMultiLabel ? "multi_label" : "single_label";
}

std::optional<TaskType> task_from_name(std::string_view name) {
  if (name == "multi_label") return TaskType::kMultiLabel;
  if (name == "single_label") return TaskType::kSingleLabel;
  return std::nullopt;
}

std::size_t cell_width(std::size_t channels, std::size_t groups, std::size_t m) {
  if (groups == 0 || m == 0) throw ConfigError("cell_width: groups and M must be >= 1");
  return (channels / groups) / m;
}

void validate_network_config(const NetworkConfig& cfg, bool allow_no_layers) {
  auto fail = [](const std::string& msg) { throw ConfigError("network config: " + msg); };
  if (cfg.channels == 0 || cfg.timesteps == 0 || cfg.height == 0 || cfg.width == 0) {
    fail("feature dims (C, T, H, W) must all be >= 1");
  }
  if (!allow_no_layers && cfg.layers == 0) fail("layers must be >= 1");
  if (cfg.layers >= 63) fail("layers must be < 63");
  if (cfg.groups == 0) fail("groups must be >= 1");
  if (cfg.scale_s != static_cast<std::size_t>(kCellNodes)) {
    fail("S must equal the number of intermediate nodes (" + std::to_string(kCellNodes) +
         ")");
  }
  if (cfg.scale_m == 0) fail("M must be >= 1");
  if (cfg.hidden == 0) fail("hidden width must be >= 1");
  if (cfg.classes == 0) fail("class count must be >= 1");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) fail("dropout must lie in [0, 1)");
  const std::size_t div = std::size_t{1} << cfg.layers;
  if (cfg.timesteps % div != 0) {
    fail("T = " + std::to_string(cfg.timesteps) + " is not divisible by 2^L = " +
         std::to_string(div));
  }
  std::size_t c = cfg.channels;
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    if (c % cfg.groups != 0) {
      fail("layer " + std::to_string(k) + ": C = " + std::to_string(c) +
           " is not divisible by N = " + std::to_string(cfg.groups));
    }
    const std::size_t w = cell_width(c, cfg.groups, cfg.scale_m);
    if (w == 0) {
      fail("layer " + std::to_string(k) + ": cell width floor((" + std::to_string(c) +
           " / " + std::to_string(cfg.groups) + ") / " + std::to_string(cfg.scale_m) +
           ") is 0");
    }
    c = cfg.groups * cfg.scale_s * w;
  }
}

std::vector<LayerShape> layer_shapes(const NetworkConfig& cfg) {
  validate_network_config(cfg, true);
  std::vector<LayerShape> out;
  std::size_t c = cfg.channels;
  std::size_t skip = cfg.channels;
  std::size_t t = cfg.timesteps;
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    const std::size_t w = cell_width(c, cfg.groups, cfg.scale_m);
    LayerShape s{c, skip, w, cfg.groups * cfg.scale_s * w, t, t / 2};
    out.push_back(s);
    skip = c;
    c = s.out_channels;
    t /= 2;
  }
  return out;
}

// ---------------------------------------------------------------------------

NasTcLayer::NasTcLayer(const std::string& name, const LayerConfig& cfg,
                       const LayerShape& shape, std::mt19937_64& rng)
    : shape_(shape) {
  if (cfg.groups == 0 || shape.in_channels % cfg.groups != 0 ||
      shape.skip_channels % cfg.groups != 0) {
    throw ConfigError("layer " + name + ": channels " + std::to_string(shape.in_channels) +
                      "/" + std::to_string(shape.skip_channels) +
                      " not divisible by N = " + std::to_string(cfg.groups));
  }
  if (cfg.scale_s != static_cast<std::size_t>(kCellNodes) || shape.cell_width == 0) {
    throw ConfigError("layer " + name + ": S must equal the cell's " +
                      std::to_string(kCellNodes) + " intermediate nodes and C/N >= M");
  }
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    const std::string cname = name + ".group" + std::to_string(g);
    const std::size_t cin = shape.in_channels / cfg.groups;
    const std::size_t cskip = shape.skip_channels / cfg.groups;
    if (cfg.genotype) {
      cells_.push_back(std::make_unique<Cell>(cname, cskip, cin, shape.cell_width,
                                              *cfg.genotype, cfg.affine, rng));
    } else {
      cells_.push_back(
          std::make_unique<Cell>(cname, cskip, cin, shape.cell_width, cfg.affine, rng));
    }
  }
}

Variable NasTcLayer::forward(const Variable& x, const Variable& skip,
                             const ForwardContext& ctx,
                             std::span<const Variable> arch_weights) {
  const FeatureDims d = feature_dims(x.value(), "layer input");
  if (d.c != shape_.in_channels) {
    throw ConfigError("layer: expected " + std::to_string(shape_.in_channels) +
                      " input channels, got " + std::to_string(d.c));
  }
  if (d.t < 2) throw ConfigError("layer: T must be >= 2, got " + std::to_string(d.t));
  Variable s = skip;
  const FeatureDims sd = feature_dims(s.value(), "layer skip input");
  if (sd.c != shape_.skip_channels) {
    throw ConfigError("layer: expected " + std::to_string(shape_.skip_channels) +
                      " skip channels, got " + std::to_string(sd.c));
  }
  if (sd.t == 2 * d.t) {
    s = pool_t(s, PoolKind::kMax, 2, 2);
  } else if (sd.t != d.t) {
    throw ConfigError("layer: skip input T = " + std::to_string(sd.t) +
                      " incompatible with T = " + std::to_string(d.t));
  }

  const std::size_t n = cells_.size();
  const std::size_t cin = shape_.in_channels / n;
  const std::size_t cskip = shape_.skip_channels / n;
  std::vector<Variable> outs;
  outs.reserve(n);
  for (std::size_t g = 0; g < n; ++g) {
    Variable xg = n == 1 ? x : slice_channels(x, g * cin, cin);
    Variable sg = n == 1 ? s : slice_channels(s, g * cskip, cskip);
    outs.push_back(cells_[g]->forward(sg, xg, ctx, arch_weights));
  }
  Variable y = n == 1 ? outs[0] : channel_shuffle(concat_channels(outs), n);
  return pool_t(y, PoolKind::kMax, 2, 2);
}

void NasTcLayer::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& c : cells_) c->collect_parameters(out);
}

void NasTcLayer::collect_buffers(std::vector<NamedTensor>& out) {
  for (auto& c : cells_) c->collect_buffers(out);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t final_channels(const NetworkConfig& cfg) {
  const auto shapes = layer_shapes(cfg);
  return shapes.empty() ? cfg.channels : shapes.back().out_channels;
}

void uniform_init(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
}

}  // namespace

NasTcNetwork::NasTcNetwork(const NetworkConfig& cfg, const Genotype& genotype,
                           std::uint64_t seed)
    : cfg_(cfg),
      genotype_(genotype),
      hidden_w_("head.hidden.weight", Tensor()),
      hidden_b_("head.hidden.bias", Tensor()),
      out_w_("head.out.weight", Tensor()),
      out_b_("head.out.bias", Tensor()),
      dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  validate_genotype(genotype);
  std::mt19937_64 rng(seed);
  build(rng, true);
}

NasTcNetwork::NasTcNetwork(const NetworkConfig& cfg, CellArch& arch, std::uint64_t seed)
    : cfg_(cfg),
      arch_(&arch),
      hidden_w_("head.hidden.weight", Tensor()),
      hidden_b_("head.hidden.bias", Tensor()),
      out_w_("head.out.weight", Tensor()),
      out_b_("head.out.bias", Tensor()),
      dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  std::mt19937_64 rng(seed);
  build(rng, false);
}

void NasTcNetwork::build(std::mt19937_64& rng, bool affine) {
  validate_network_config(cfg_);
  LayerConfig lc{cfg_.groups, cfg_.scale_s, cfg_.scale_m, arch_ ? nullptr : &genotype_,
                 affine};
  const auto shapes = layer_shapes(cfg_);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    layers_.push_back(
        std::make_unique<NasTcLayer>("layer" + std::to_string(k), lc, shapes[k], rng));
  }
  const std::size_t c = final_channels(cfg_);
  hidden_w_.value() = Tensor({cfg_.hidden, c});
  hidden_b_.value() = Tensor({cfg_.hidden});
  out_w_.value() = Tensor({cfg_.classes, cfg_.hidden});
  out_b_.value() = Tensor({cfg_.classes});
  kaiming_uniform(hidden_w_.value(), c, rng);
  uniform_init(out_w_.value(), 1.0 / std::sqrt(static_cast<double>(cfg_.hidden)), rng);
  for (Parameter* p : {&hidden_w_, &hidden_b_, &out_w_, &out_b_}) p->zero_grad();
}

Variable NasTcNetwork::forward(const Tensor& features, const ForwardContext& ctx) {
  const FeatureDims d = feature_dims(features, "network input");
  if (d.c != cfg_.channels || d.t != cfg_.timesteps || d.h != cfg_.height ||
      d.w != cfg_.width) {
    throw ConfigError("network: input " + shape_string(features.shape()) +
                      " does not match configured (C, T, H, W) = (" +
                      std::to_string(cfg_.channels) + ", " +
                      std::to_string(cfg_.timesteps) + ", " + std::to_string(cfg_.height) +
                      ", " + std::to_string(cfg_.width) + ")");
  }
  std::vector<Variable> weights;
  if (arch_) weights = arch_->softmax_weights();

  Variable x = Variable::constant(features);
  Variable skip = x;
  for (auto& layer : layers_) {
    Variable y = layer->forward(x, skip, ctx, weights);
    skip = x;
    x = y;
  }
  Variable h = global_avg_pool(x);
  h = relu(linear(h, Variable::leaf(hidden_w_), Variable::leaf(hidden_b_)));
  if (ctx.training && cfg_.dropout > 0) {
    h = dropout(h, cfg_.dropout, ctx.rng ? *ctx.rng : dropout_rng_, true);
  }
  return linear(h, Variable::leaf(out_w_), Variable::leaf(out_b_));
}

std::vector<Parameter*> NasTcNetwork::classifier_parameters() {
  return {&hidden_w_, &hidden_b_, &out_w_, &out_b_};
}

void NasTcNetwork::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
  for (Parameter* p : classifier_parameters()) out.push_back(p);
}

void NasTcNetwork::collect_buffers(std::vector<NamedTensor>& out) {
  for (auto& l : layers_) l->collect_buffers(out);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t projection_count(std::size_t in, std::size_t width, bool affine) {
  return in * width + (affine ? 2 * width : 0);
}

}  // namespace

std::size_t count_cell_parameters(std::size_t skip_channels, std::size_t in_channels,
                                  std::size_t width, const Genotype& genotype,
                                  bool affine) {
  std::size_t n = projection_count(skip_channels, width, affine) +
                  projection_count(in_channels, width, affine);
  for (const auto& pair : genotype.nodes) {
    for (const GenotypeEdge& e : pair) n += op_parameter_count(e.op, width, affine);
  }
  return n;
}

std::size_t count_relaxed_cell_parameters(std::size_t skip_channels,
                                          std::size_t in_channels, std::size_t width,
                                          bool affine) {
  std::size_t per_edge = 0;
  for (const OpSpec& spec : op_table()) per_edge += op_parameter_count(spec.kind, width, affine);
  return projection_count(skip_channels, width, affine) +
         projection_count(in_channels, width, affine) + kCellEdges * per_edge;
}

std::size_t count_classifier_parameters(const NetworkConfig& cfg) {
  const std::size_t c = final_channels(cfg);
  return cfg.hidden * c + cfg.hidden + cfg.classes * cfg.hidden + cfg.classes;
}

namespace {

template <typename CellCount>
ParameterCount count_with(const NetworkConfig& cfg, CellCount cell) {
  ParameterCount pc;
  for (const LayerShape& s : layer_shapes(cfg)) {
    const std::size_t per_cell =
        cell(s.skip_channels / cfg.groups, s.in_channels / cfg.groups, s.cell_width);
    pc.layers.push_back(cfg.groups * per_cell);
    pc.tc_layers += pc.layers.back();
  }
  pc.classifier = count_classifier_parameters(cfg);
  pc.total = pc.tc_layers + pc.classifier;
  return pc;
}

}  // namespace

ParameterCount count_parameters(const NetworkConfig& cfg, const Genotype& genotype,
                                bool affine) {
  validate_genotype(genotype);
  return count_with(cfg, [&](std::size_t skip, std::size_t in, std::size_t w) {
    return count_cell_parameters(skip, in, w, genotype, affine);
  });
}

ParameterCount count_relaxed_parameters(const NetworkConfig& cfg, bool affine) {
  return count_with(cfg, [&](std::size_t skip, std::size_t in, std::size_t w) {
    return count_relaxed_cell_parameters(skip, in, w, affine);
  });
}

}  // namespace nastc
