// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/train_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "nas_tc/errors.hpp"
#include "nas_tc/optim.hpp"

namespace nastc {

void validate_train_config(const TrainConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
  if (cfg.batch_size == 0) fail("batch_size must be >= 1");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) fail("lr must be >= 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(cfg.eps > 0.0)) fail("eps must be > 0");
  if (!(cfg.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (cfg.checkpoint_every != 0 && cfg.epochs % cfg.checkpoint_every != 0) {
    fail("checkpoint_every = " + std::to_string(cfg.checkpoint_every) +
         " does not divide epochs = " + std::to_string(cfg.epochs));
  }
}

namespace {

Variable task_loss(TaskType task, const Variable& logits, const Tensor& labels) {
  return task == TaskType::kMultiLabel ? bce_with_logits(logits, labels)
                                       : softmax_cross_entropy(logits, labels);
}

void check_dataset(const NetworkConfig& cfg, const Dataset& d, const char* what) {
  if (d.channels != cfg.channels || d.timesteps != cfg.timesteps || d.height != cfg.height ||
      d.width != cfg.width || d.classes != cfg.classes) {
    throw ConfigError(std::string(what) + " dims (C=" + std::to_string(d.channels) +
                      ", T=" + std::to_string(d.timesteps) + ", H=" +
                      std::to_string(d.height) + ", W=" + std::to_string(d.width) +
                      ", K=" + std::to_string(d.classes) +
                      ") do not match the network config");
  }
  const bool single = cfg.task == TaskType::kSingleLabel;
  if (single != (d.label_mode == LabelMode::kSingleLabel)) {
    throw ConfigError(std::string(what) + " label mode does not match the network task");
  }
}

}  // namespace

std::vector<EpochRecord> train_network(NasTcNetwork& net, const Dataset& train_set,
                                       const Dataset* val_set, const TrainConfig& cfg,
                                       const CheckpointFn& checkpoint) {
  validate_train_config(cfg);
  check_dataset(net.config(), train_set, "training set");
  if (val_set) check_dataset(net.config(), *val_set, "validation set");
  if (train_set.size() == 0) throw ConfigError("training set is empty");

  Adam opt(net.parameters(), {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay});
  std::mt19937_64 rng(cfg.seed ^ 0x7472616e6e6574ULL);
  ForwardContext ctx{true, &rng};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochRecord> history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::span<const std::size_t> idx =
          std::span<const std::size_t>(order).subspan(b, std::min(cfg.batch_size, order.size() - b));
      opt.zero_grad();
      Variable loss;
      try {
        loss = task_loss(net.config().task, net.forward(batch_features(train_set, idx), ctx),
                         batch_labels(train_set, idx));
        backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " +
                           e.what());
      }
      const double l = loss.value()[0];
      if (!std::isfinite(l)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ": loss is not finite");
      }
      loss_sum += l * static_cast<double>(idx.size());
      opt.step();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    if (val_set && val_set->size() > 0) {
      const EvalReport r = evaluate(net, *val_set, cfg.batch_size);
      rec.val_metric = r.accuracy ? *r.accuracy : r.map;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.push_back(rec);
    if (checkpoint && cfg.checkpoint_every != 0 && epoch % cfg.checkpoint_every == 0) {
      checkpoint(epoch, net);
    }
  }
  return history;
}

TrainOutcome train(const Genotype& genotype, const Dataset& train_set,
                   const Dataset* val_set, const NetworkConfig& net_cfg,
                   const TrainConfig& cfg, const CheckpointFn& checkpoint) {
  TrainOutcome out;
  out.net = std::make_unique<NasTcNetwork>(net_cfg, genotype, cfg.seed);
  out.history = train_network(*out.net, train_set, val_set, cfg, checkpoint);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

double average_precision(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw ConfigError("average_precision: " + std::to_string(scores.size()) + " scores vs " +
                      std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double positives = 0;
  for (double y : labels) positives += y > 0.5 ? 1 : 0;
  if (positives == 0) throw ConfigError("average_precision: no positives");
  double hits = 0, ap = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (labels[idx[k]] > 0.5) {
      hits += 1;
      ap += hits / static_cast<double>(k + 1);
    }
  }
  return ap / positives;
}

ApResult mean_average_precision(std::span<const double> scores,
                                std::span<const double> labels, std::size_t classes) {
  if (classes == 0 || scores.size() != labels.size() || scores.size() % classes != 0) {
    throw ConfigError("mean_average_precision: shapes of scores (" +
                      std::to_string(scores.size()) + ") and labels (" +
                      std::to_string(labels.size()) + ") disagree for K = " +
                      std::to_string(classes));
  }
  const std::size_t n = scores.size() / classes;
  ApResult out;
  out.per_class.resize(classes);
  std::vector<double> s(n), y(n);
  double total = 0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < classes; ++k) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = scores[i * classes + k];
      y[i] = labels[i * classes + k];
      any = any || y[i] > 0.5;
    }
    if (!any) continue;
    const double ap = average_precision(s, y);
    out.per_class[k] = ap;
    total += ap;
    ++counted;
  }
  if (counted == 0) throw ConfigError("mean_average_precision: no positives");
  out.map = total / static_cast<double>(counted);
  return out;
}

namespace {

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

}  // namespace

double accuracy(std::span<const double> scores, std::span<const double> labels,
                std::size_t classes) {
  if (classes == 0 || scores.size() != labels.size() || scores.size() % classes != 0) {
    throw ConfigError("accuracy: shapes of scores and labels disagree");
  }
  const std::size_t n = scores.size() / classes;
  if (n == 0) throw ConfigError("accuracy: empty batch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (argmax_row(scores.subspan(i * classes, classes)) ==
        argmax_row(labels.subspan(i * classes, classes))) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

EvalReport evaluate(NasTcNetwork& net, const Dataset& data, std::size_t batch_size) {
  const NetworkConfig& cfg = net.config();
  check_dataset(cfg, data, "evaluation set");
  if (data.size() == 0) throw ConfigError("evaluation set is empty");
  if (batch_size == 0) batch_size = 1;
  const std::size_t k = cfg.classes;

  EvalReport r;
  r.task = cfg.task;
  r.samples = data.size();
  r.scores.reserve(data.size() * k);
  std::vector<double> labels;
  labels.reserve(data.size() * k);
  ForwardContext ctx{false, nullptr};
  double loss_sum = 0;
  std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < data.size(); b += batch_size) {
    idx.clear();
    for (std::size_t i = b; i < std::min(data.size(), b + batch_size); ++i) idx.push_back(i);
    const Tensor y = batch_labels(data, idx);
    const Variable logits = net.forward(batch_features(data, idx), ctx);
    loss_sum += task_loss(cfg.task, logits, y).value()[0] * static_cast<double>(idx.size());
    const std::span<const double> z = logits.value().data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::span<const double> row = z.subspan(i * k, k);
      if (cfg.task == TaskType::kMultiLabel) {
        for (double v : row) r.scores.push_back(1.0 / (1.0 + std::exp(-v)));
      } else {
        for (double v : softmax_values(row)) r.scores.push_back(v);
      }
    }
    labels.insert(labels.end(), y.data().begin(), y.data().end());
  }
  r.loss = loss_sum / static_cast<double>(data.size());

  bool any_positive = false;
  for (double v : labels) any_positive = any_positive || v > 0.5;
  if (any_positive) {
    ApResult ap = mean_average_precision(r.scores, labels, k);
    r.map = ap.map;
    r.per_class_ap = std::move(ap.per_class);
  } else {
    r.per_class_ap.assign(k, std::nullopt);
  }
  if (cfg.task == TaskType::kSingleLabel) r.accuracy = accuracy(r.scores, labels, k);

  r.confusion.assign(k, {});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::span<const double> row = std::span<const double>(r.scores).subspan(i * k, k);
    const std::size_t top = argmax_row(row);
    for (std::size_t c = 0; c < k; ++c) {
      const bool pred = cfg.task == TaskType::kMultiLabel ? row[c] >= 0.5 : c == top;
      const bool truth = labels[i * k + c] > 0.5;
      ClassCounts& cc = r.confusion[c];
      if (pred && truth) ++cc.tp;
      else if (pred) ++cc.fp;
      else if (truth) ++cc.fn;
      else ++cc.tn;
    }
  }
  return r;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(r.task));
  j["samples"] = r.samples;
  j["loss"] = r.loss;
  j["map"] = r.map;
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.per_class_ap.size(); ++c) {
    nlohmann::ordered_json e;
    e["class"] = c;
    e["ap"] = r.per_class_ap[c] ? nlohmann::ordered_json(*r.per_class_ap[c])
                                : nlohmann::ordered_json(nullptr);
    if (c < r.confusion.size()) {
      e["tp"] = r.confusion[c].tp;
      e["fp"] = r.confusion[c].fp;
      e["fn"] = r.confusion[c].fn;
      e["tn"] = r.confusion[c].tn;
    }
    classes.push_back(std::move(e));
  }
  j["classes"] = std::move(classes);
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "task      %s\nsamples   %zu\nloss      %.6f\nmAP       %.4f\n",
                std::string(task_name(r.task)).c_str(), r.samples, r.loss, r.map);
  out += line;
  if (r.accuracy) {
    std::snprintf(line, sizeof line, "accuracy  %.4f\n", *r.accuracy);
    out += line;
  }
  std::snprintf(line, sizeof line, "\n%5s  %8s  %6s  %6s  %6s  %6s\n", "class", "AP", "TP", "FP",
                "FN", "TN");
  out += line;
  for (std::size_t c = 0; c < r.per_class_ap.size(); ++c) {
    const ClassCounts cc = c < r.confusion.size() ? r.confusion[c] : ClassCounts{};
    char ap[16];
    if (r.per_class_ap[c]) {
      std::snprintf(ap, sizeof ap, "%.4f", *r.per_class_ap[c]);
    } else {
      std::snprintf(ap, sizeof ap, "-");
    }
    std::snprintf(line, sizeof line, "%5zu  %8s  %6zu  %6zu  %6zu  %6zu\n", c, ap, cc.tp, cc.fp,
                  cc.fn, cc.tn);
    out += line;
  }
  return out;
}

}  // namespace nastc
