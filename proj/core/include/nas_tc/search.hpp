// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// First-order bilevel search: alternating alpha steps on validation batches
// and weight steps on training batches over a relaxed network that shares a
// single CellArch across all layers and groups.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nas_tc/data_io.hpp"
#include "nas_tc/network.hpp"
#include "nas_tc/optim.hpp"

namespace nastc {

struct SearchConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double train_fraction = 0.5;  // remainder drives the alpha updates

  double alpha_lr = 3e-4;
  double alpha_beta1 = 0.5;
  double alpha_beta2 = 0.999;
  double alpha_eps = 1e-8;
  double alpha_weight_decay = 1e-3;
  double alpha_init_sigma = 1e-3;

  double w_lr = 0.025;
  double w_lr_min = 1e-3;
  double w_momentum = 0.9;
  double w_weight_decay = 3e-4;
  double grad_clip = 5.0;

  std::uint64_t seed = 0;

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

void validate_search_config(const SearchConfig& cfg);

struct SearchEpoch {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  Genotype genotype;
  double seconds = 0.0;
};

class Searcher {
 public:
  Searcher(const NetworkConfig& net_cfg, const SearchConfig& cfg);
  Searcher(const Searcher&) = delete;
  Searcher& operator=(const Searcher&) = delete;

  // One Adam step on alpha from the loss on (x, y); weights are not modified.
  // Returns the loss.
  double alpha_step(const Tensor& x, const Tensor& y);
  // One SGD step on the network weights; alpha is not modified.
  double weight_step(const Tensor& x, const Tensor& y);
  // Sets the cosine-annealed weight learning rate for a 0-based epoch.
  void begin_epoch(std::size_t epoch);

  CellArch& arch() { return arch_; }
  NasTcNetwork& network() { return *net_; }
  Genotype genotype() const { return derive_genotype(arch_); }

 private:
  double loss_and_backward(const Tensor& x, const Tensor& y, bool for_alpha);

  SearchConfig cfg_;
  std::mt19937_64 rng_;
  CellArch arch_;
  std::unique_ptr<NasTcNetwork> net_;
  std::vector<Parameter*> weights_;
  std::vector<Parameter*> alphas_;
  Adam alpha_opt_;
  Sgd weight_opt_;
};

struct SearchResult {
  Genotype genotype;
  std::vector<SearchEpoch> trace;
  std::vector<AlphaRow> alphas;
};

// Splits `data` into weight/alpha halves, runs cfg.epochs epochs and derives
// the genotype. Throws NumericError (with the trace so far) on divergence.
SearchResult search(const Dataset& data, const NetworkConfig& net_cfg,
                    const SearchConfig& cfg);

// Losses and genotypes only unless `with_timing`.
std::string trace_json(const std::vector<SearchEpoch>& trace, bool with_timing = true);

}  // namespace nastc
