// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nas_tc/data_io.hpp"
#include "nas_tc/network.hpp"

namespace nastc {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 18;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-4;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0 disables; otherwise must divide epochs

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate_train_config(const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_metric;  // mAP (multi-label) or accuracy
  double seconds = 0.0;
};

using CheckpointFn = std::function<void(std::size_t epoch, NasTcNetwork& net)>;

// Trains every weight of `net` with Adam. Multi-label tasks minimise the mean
// per-class binary cross-entropy on logits; single-label tasks minimise
// softmax cross-entropy. Throws NumericError on a non-finite loss; weights
// saved by earlier checkpoints are left untouched.
std::vector<EpochRecord> train_network(NasTcNetwork& net, const Dataset& train_set,
                                       const Dataset* val_set, const TrainConfig& cfg,
                                       const CheckpointFn& checkpoint = {});

struct TrainOutcome {
  std::unique_ptr<NasTcNetwork> net;
  std::vector<EpochRecord> history;
};

// Builds the discrete network (seeded by cfg.seed) and trains it.
TrainOutcome train(const Genotype& genotype, const Dataset& train_set,
                   const Dataset* val_set, const NetworkConfig& net_cfg,
                   const TrainConfig& cfg, const CheckpointFn& checkpoint = {});

// Scores/labels are row-major (n, K).
struct ApResult {
  double map = 0.0;
  std::vector<std::optional<double>> per_class;  // nullopt: no positives
};

// Per class: rank by descending score (stable on ties), AP = sum over ranks of
// precision@k * delta-recall@k. Classes without positives are left out of the
// mean. Throws ConfigError("no positives") when no class has a positive.
ApResult mean_average_precision(std::span<const double> scores,
                                std::span<const double> labels, std::size_t classes);
double average_precision(std::span<const double> scores, std::span<const double> labels);

// Fraction of rows whose score argmax equals the label argmax (ties to the
// lowest class index).
double accuracy(std::span<const double> scores, std::span<const double> labels,
                std::size_t classes);

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct EvalReport {
  TaskType task = TaskType::kMultiLabel;
  std::size_t samples = 0;
  double loss = 0.0;
  double map = 0.0;
  std::vector<std::optional<double>> per_class_ap;
  std::optional<double> accuracy;  // single-label only
  // Predictions: score >= 0.5 (multi-label) or argmax (single-label).
  std::vector<ClassCounts> confusion;
  std::vector<double> scores;  // (samples, K): sigmoid or softmax outputs
};

EvalReport evaluate(NasTcNetwork& net, const Dataset& data, std::size_t batch_size = 32);

std::string report_json(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace nastc
