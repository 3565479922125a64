// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "nas_tc/errors.hpp"

namespace nastc {

void validate_search_config(const SearchConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError("search config: " + msg); };
  if (cfg.epochs == 0) fail("epochs must be >= 1");
  if (cfg.batch_size == 0) fail("batch_size must be >= 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    fail("train_fraction must lie in (0, 1)");
  }
  if (!(cfg.alpha_lr >= 0.0)) fail("alpha_lr must be >= 0");
  if (!(cfg.alpha_beta1 >= 0.0 && cfg.alpha_beta1 < 1.0)) fail("alpha_beta1 must lie in [0, 1)");
  if (!(cfg.alpha_beta2 >= 0.0 && cfg.alpha_beta2 < 1.0)) fail("alpha_beta2 must lie in [0, 1)");
  if (!(cfg.alpha_eps > 0.0)) fail("alpha_eps must be > 0");
  if (!(cfg.alpha_weight_decay >= 0.0)) fail("alpha_weight_decay must be >= 0");
  if (!(cfg.alpha_init_sigma >= 0.0)) fail("alpha_init_sigma must be >= 0");
  if (!(cfg.w_lr >= 0.0)) fail("w_lr must be >= 0");
  if (!(cfg.w_lr_min >= 0.0 && cfg.w_lr_min <= cfg.w_lr)) fail("w_lr_min must lie in [0, w_lr]");
  if (!(cfg.w_momentum >= 0.0 && cfg.w_momentum < 1.0)) fail("w_momentum must lie in [0, 1)");
  if (!(cfg.w_weight_decay >= 0.0)) fail("w_weight_decay must be >= 0");
  if (!(cfg.grad_clip > 0.0)) fail("grad_clip must be > 0");
}

Searcher::Searcher(const NetworkConfig& net_cfg, const SearchConfig& cfg)
    : cfg_((validate_search_config(cfg), cfg)),
      rng_(cfg.seed),
      arch_(rng_, cfg.alpha_init_sigma),
      net_(std::make_unique<NasTcNetwork>(net_cfg, arch_, cfg.seed + 1)),
      weights_(net_->parameters()),
      alphas_(arch_.parameters()),
      alpha_opt_(alphas_, {cfg.alpha_lr, cfg.alpha_beta1, cfg.alpha_beta2, cfg.alpha_eps,
                           cfg.alpha_weight_decay}),
      weight_opt_(weights_, {cfg.w_lr, cfg.w_momentum, cfg.w_weight_decay}) {}

double Searcher::loss_and_backward(const Tensor& x, const Tensor& y, bool for_alpha) {
  struct FreezeGuard {
    std::vector<Parameter*>& a;
    std::vector<Parameter*>& b;
    ~FreezeGuard() {
      for (Parameter* p : a) p->set_frozen(false);
      for (Parameter* p : b) p->set_frozen(false);
    }
  } guard{weights_, alphas_};
  for (Parameter* p : weights_) p->set_frozen(for_alpha);
  for (Parameter* p : alphas_) p->set_frozen(!for_alpha);
  zero_grad(weights_);
  zero_grad(alphas_);
  ForwardContext ctx{true, &rng_};
  const Variable logits = net_->forward(x, ctx);
  const Variable loss = net_->config().task == TaskType::kMultiLabel
                            ? bce_with_logits(logits, y)
                            : softmax_cross_entropy(logits, y);
  backward(loss);
  const double l = loss.value()[0];
  if (!std::isfinite(l)) throw NumericError("search loss is not finite");
  return l;
}

double Searcher::alpha_step(const Tensor& x, const Tensor& y) {
  const double l = loss_and_backward(x, y, true);
  alpha_opt_.step();
  return l;
}

double Searcher::weight_step(const Tensor& x, const Tensor& y) {
  const double l = loss_and_backward(x, y, false);
  clip_grad_norm(weights_, cfg_.grad_clip);
  weight_opt_.step();
  return l;
}

void Searcher::begin_epoch(std::size_t epoch) {
  weight_opt_.set_lr(cosine_lr(cfg_.w_lr, cfg_.w_lr_min, static_cast<int>(epoch),
                               static_cast<int>(cfg_.epochs)));
}

std::string trace_json(const std::vector<SearchEpoch>& trace, bool with_timing) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const SearchEpoch& e : trace) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["val_loss"] = e.val_loss;
    j["genotype"] = nlohmann::ordered_json::parse(serialize_genotype(e.genotype))["nodes"];
    if (with_timing) j["seconds"] = e.seconds;
    arr.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["version"] = std::string(kSchemaVersion);
  doc["epochs"] = std::move(arr);
  return doc.dump(2) + "\n";
}

SearchResult search(const Dataset& data, const NetworkConfig& net_cfg,
                    const SearchConfig& cfg) {
  validate_search_config(cfg);
  if (data.channels != net_cfg.channels || data.timesteps != net_cfg.timesteps ||
      data.height != net_cfg.height || data.width != net_cfg.width ||
      data.classes != net_cfg.classes) {
    throw ConfigError("search: dataset dims do not match the network config");
  }
  auto [train_set, val_set] = split_dataset(data, cfg.train_fraction, cfg.seed);
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw ConfigError("search: split leaves an empty weight or alpha set");
  }

  Searcher s(net_cfg, cfg);
  std::mt19937_64 order_rng(cfg.seed ^ 0x5ea4c4ULL);
  std::vector<std::size_t> ti(train_set.size()), vi(val_set.size());
  std::iota(ti.begin(), ti.end(), std::size_t{0});
  std::iota(vi.begin(), vi.end(), std::size_t{0});

  SearchResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    s.begin_epoch(epoch);
    std::shuffle(ti.begin(), ti.end(), order_rng);
    std::shuffle(vi.begin(), vi.end(), order_rng);
    const std::size_t bs = cfg.batch_size;
    const std::size_t steps = std::max<std::size_t>(
        1, std::min((ti.size() + bs - 1) / bs, (vi.size() + bs - 1) / bs));
    double tl = 0, vl = 0;
    std::size_t tn = 0, vn = 0;
    try {
      for (std::size_t step = 0; step < steps; ++step) {
        const std::span<const std::size_t> vb = std::span<const std::size_t>(vi).subspan(
            (step * bs) % vi.size(), std::min(bs, vi.size() - (step * bs) % vi.size()));
        const std::span<const std::size_t> tb = std::span<const std::size_t>(ti).subspan(
            (step * bs) % ti.size(), std::min(bs, ti.size() - (step * bs) % ti.size()));
        vl += s.alpha_step(batch_features(val_set, vb), batch_labels(val_set, vb)) *
              static_cast<double>(vb.size());
        vn += vb.size();
        tl += s.weight_step(batch_features(train_set, tb), batch_labels(train_set, tb)) *
              static_cast<double>(tb.size());
        tn += tb.size();
      }
    } catch (const NumericError& e) {
      std::string msg = "search diverged in epoch " + std::to_string(epoch + 1) + ": " +
                        e.what() + "\ntrace so far:\n" + trace_json(result.trace, false);
      throw NumericError(msg);
    }
    SearchEpoch rec;
    rec.epoch = epoch + 1;
    rec.train_loss = tl / static_cast<double>(tn);
    rec.val_loss = vl / static_cast<double>(vn);
    rec.genotype = s.genotype();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.push_back(rec);
  }
  result.genotype = s.genotype();
  result.alphas = s.arch().rows();
  return result;
}

}  // namespace nastc
