// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/config.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "nas_tc/errors.hpp"
#include "nas_tc/file_io.hpp"

namespace nastc {

namespace {

using ojson = nlohmann::ordered_json;

// Reads typed fields out of one JSON object and rejects leftovers.
class Section {
 public:
  Section(const ojson& obj, std::string base) : obj_(obj), base_(std::move(base)) {
    if (!obj_.is_object()) throw ParseError(base_.empty() ? "/" : base_, "expected an object");
  }

  std::string at(std::string_view key) const { return base_ + "/" + std::string(key); }

  const ojson* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = obj_.find(std::string(key));
    return it == obj_.end() ? nullptr : &*it;
  }

  bool uint(std::string_view key, std::size_t& dst, std::size_t min = 0) {
    const ojson* v = find(key);
    if (!v) return false;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0)) {
      throw ParseError(at(key), "expected a non-negative integer, got " + v->dump());
    }
    const auto u = v->get<std::uint64_t>();
    if (u < min) {
      throw ParseError(at(key), "must be >= " + std::to_string(min) + ", got " + v->dump());
    }
    dst = static_cast<std::size_t>(u);
    return true;
  }

  bool u64(std::string_view key, std::uint64_t& dst) {
    const ojson* v = find(key);
    if (!v) return false;
    if (!v->is_number_unsigned()) {
      throw ParseError(at(key), "expected a non-negative integer, got " + v->dump());
    }
    dst = v->get<std::uint64_t>();
    return true;
  }

  bool real(std::string_view key, double& dst, double lo = -std::numeric_limits<double>::infinity(),
            double hi = std::numeric_limits<double>::infinity()) {
    const ojson* v = find(key);
    if (!v) return false;
    if (!v->is_number()) throw ParseError(at(key), "expected a number, got " + v->dump());
    const double d = v->get<double>();
    if (!std::isfinite(d) || d < lo || d > hi) {
      throw ParseError(at(key), "value " + v->dump() + " out of range [" + fmt(lo) + ", " +
                                    fmt(hi) + "]");
    }
    dst = d;
    return true;
  }

  bool string(std::string_view key, std::string& dst) {
    const ojson* v = find(key);
    if (!v) return false;
    if (!v->is_string()) throw ParseError(at(key), "expected a string, got " + v->dump());
    dst = v->get<std::string>();
    return true;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ParseError(at(it.key()), "unknown key");
    }
  }

 private:
  static std::string fmt(double d) {
    if (std::isinf(d)) return d < 0 ? "-inf" : "inf";
    return ojson(d).dump();
  }

  const ojson& obj_;
  std::string base_;
  std::set<std::string> seen_;
};

template <typename Fn>
void rethrow_at(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ParseError(where, e.what());
  }
}

LabelMode parse_label_mode(Section& s, std::string_view key, LabelMode def) {
  std::string name;
  if (!s.string(key, name)) return def;
  if (name == "multi_label") return LabelMode::kMultiLabel;
  if (name == "single_label") return LabelMode::kSingleLabel;
  throw ParseError(s.at(key), "expected \"multi_label\" or \"single_label\", got \"" + name + "\"");
}

std::string label_mode_name(LabelMode m) {
  return m == LabelMode::kMultiLabel ? "multi_label" : "single_label";
}

void parse_network(const ojson& j, RunConfig& cfg) {
  Section s(j, "/network");
  NetworkConfig& n = cfg.network;
  auto mark = [&](std::string_view key, bool present) {
    if (present) cfg.network_keys.insert(std::string(key));
  };
  mark("channels", s.uint("channels", n.channels, 1));
  mark("timesteps", s.uint("timesteps", n.timesteps, 1));
  mark("height", s.uint("height", n.height, 1));
  mark("width", s.uint("width", n.width, 1));
  mark("layers", s.uint("layers", n.layers, 1));
  mark("groups", s.uint("groups", n.groups, 1));
  mark("scale_s", s.uint("scale_s", n.scale_s, 1));
  mark("scale_m", s.uint("scale_m", n.scale_m, 1));
  mark("hidden", s.uint("hidden", n.hidden, 1));
  mark("classes", s.uint("classes", n.classes, 1));
  mark("dropout", s.real("dropout", n.dropout, 0.0, 0.999999));
  std::string task;
  if (s.string("task", task)) {
    const auto t = task_from_name(task);
    if (!t) throw ParseError("/network/task", "expected \"multi_label\" or \"single_label\"");
    n.task = *t;
    mark("task", true);
  }
  s.finish();
}

void parse_search(const ojson& j, SearchConfig& c) {
  Section s(j, "/search");
  s.uint("epochs", c.epochs, 1);
  s.uint("batch_size", c.batch_size, 1);
  s.real("train_fraction", c.train_fraction, 1e-9, 1.0 - 1e-9);
  s.real("alpha_lr", c.alpha_lr, 0.0);
  s.real("alpha_beta1", c.alpha_beta1, 0.0, 0.999999);
  s.real("alpha_beta2", c.alpha_beta2, 0.0, 0.999999);
  s.real("alpha_eps", c.alpha_eps, 1e-300);
  s.real("alpha_weight_decay", c.alpha_weight_decay, 0.0);
  s.real("alpha_init_sigma", c.alpha_init_sigma, 0.0);
  s.real("w_lr", c.w_lr, 0.0);
  s.real("w_lr_min", c.w_lr_min, 0.0);
  s.real("w_momentum", c.w_momentum, 0.0, 0.999999);
  s.real("w_weight_decay", c.w_weight_decay, 0.0);
  s.real("grad_clip", c.grad_clip, 1e-300);
  s.u64("seed", c.seed);
  s.finish();
  rethrow_at("/search", [&] { validate_search_config(c); });
}

void parse_train(const ojson& j, TrainConfig& c) {
  Section s(j, "/train");
  s.uint("epochs", c.epochs);
  s.uint("batch_size", c.batch_size, 1);
  s.real("lr", c.lr, 0.0);
  s.real("beta1", c.beta1, 0.0, 0.999999);
  s.real("beta2", c.beta2, 0.0, 0.999999);
  s.real("eps", c.eps, 1e-300);
  s.real("weight_decay", c.weight_decay, 0.0);
  s.u64("seed", c.seed);
  s.uint("checkpoint_every", c.checkpoint_every);
  s.finish();
  rethrow_at("/train", [&] { validate_train_config(c); });
}

void parse_synth_object(const ojson& j, const std::string& base, SynthSpec& spec) {
  Section s(j, base);
  s.uint("classes", spec.classes, 1);
  s.uint("samples_per_class", spec.samples_per_class, 1);
  s.uint("channels", spec.channels, 1);
  s.uint("timesteps", spec.timesteps, 1);
  s.uint("height", spec.height, 1);
  s.uint("width", spec.width, 1);
  spec.label_mode = parse_label_mode(s, "label_mode", spec.label_mode);
  s.real("overlap", spec.overlap, 0.0, 1.0);
  s.real("noise", spec.noise, 0.0);
  s.real("distractors", spec.distractors, 0.0);
  if (const ojson* p = s.find("distractor_periods")) {
    if (!p->is_array()) throw ParseError(s.at("distractor_periods"), "expected an array");
    spec.distractor_periods.clear();
    for (std::size_t i = 0; i < p->size(); ++i) {
      if (!(*p)[i].is_number_unsigned()) {
        throw ParseError(s.at("distractor_periods") + "/" + std::to_string(i),
                         "expected a non-negative integer");
      }
      spec.distractor_periods.push_back((*p)[i].get<std::size_t>());
    }
  }
  s.u64("seed", spec.seed);
  if (const ojson* m = s.find("motifs")) {
    const std::string mbase = s.at("motifs");
    if (!m->is_array()) throw ParseError(mbase, "expected an array (one list per class)");
    spec.motifs.clear();
    for (std::size_t k = 0; k < m->size(); ++k) {
      const std::string kbase = mbase + "/" + std::to_string(k);
      if (!(*m)[k].is_array()) throw ParseError(kbase, "expected an array of motifs");
      std::vector<Motif> lib;
      for (std::size_t i = 0; i < (*m)[k].size(); ++i) {
        Section ms((*m)[k][i], kbase + "/" + std::to_string(i));
        Motif motif;
        if (const ojson* ch = ms.find("channels")) {
          if (!ch->is_array()) throw ParseError(ms.at("channels"), "expected an array");
          for (std::size_t c = 0; c < ch->size(); ++c) {
            if (!(*ch)[c].is_number_unsigned()) {
              throw ParseError(ms.at("channels") + "/" + std::to_string(c),
                               "expected a non-negative integer");
            }
            motif.channels.push_back((*ch)[c].get<std::size_t>());
          }
        }
        ms.uint("period", motif.period);
        ms.uint("duration", motif.duration);
        ms.real("amplitude", motif.amplitude);
        ms.finish();
        lib.push_back(std::move(motif));
      }
      spec.motifs.push_back(std::move(lib));
    }
  } else {
    spec.motifs = default_motif_library(spec.classes, spec.channels, spec.timesteps);
  }
  s.finish();
  rethrow_at(base.empty() ? "/" : base, [&] { validate_synth_spec(spec); });
}

ojson parse_document(std::string_view text) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
}

ojson synth_object(const SynthSpec& s) {
  ojson j;
  j["classes"] = s.classes;
  j["samples_per_class"] = s.samples_per_class;
  j["channels"] = s.channels;
  j["timesteps"] = s.timesteps;
  j["height"] = s.height;
  j["width"] = s.width;
  j["label_mode"] = label_mode_name(s.label_mode);
  j["overlap"] = s.overlap;
  j["noise"] = s.noise;
  j["distractors"] = s.distractors;
  j["distractor_periods"] = s.distractor_periods;
  j["seed"] = s.seed;
  ojson motifs = ojson::array();
  for (const auto& lib : s.motifs) {
    ojson arr = ojson::array();
    for (const Motif& m : lib) {
      ojson mj;
      mj["channels"] = m.channels;
      mj["period"] = m.period;
      mj["duration"] = m.duration;
      mj["amplitude"] = m.amplitude;
      arr.push_back(std::move(mj));
    }
    motifs.push_back(std::move(arr));
  }
  j["motifs"] = std::move(motifs);
  return j;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.synth.motifs =
      default_motif_library(cfg.synth.classes, cfg.synth.channels, cfg.synth.timesteps);
  return cfg;
}

RunConfig parse_config(std::string_view text) {
  const ojson doc = parse_document(text);
  RunConfig cfg = default_config();
  Section top(doc, "");
  if (const ojson* j = top.find("network")) parse_network(*j, cfg);
  if (const ojson* j = top.find("search")) parse_search(*j, cfg.search);
  if (const ojson* j = top.find("train")) parse_train(*j, cfg.train);
  if (const ojson* j = top.find("synth")) parse_synth_object(*j, "/synth", cfg.synth);
  top.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

SynthSpec parse_synth_spec(std::string_view text) {
  const ojson doc = parse_document(text);
  SynthSpec spec;
  parse_synth_object(doc, "", spec);
  return spec;
}

std::string synth_spec_json(const SynthSpec& spec) { return synth_object(spec).dump(2) + "\n"; }

std::string config_json(const RunConfig& cfg) {
  ojson j;
  const NetworkConfig& n = cfg.network;
  ojson net;
  net["channels"] = n.channels;
  net["timesteps"] = n.timesteps;
  net["height"] = n.height;
  net["width"] = n.width;
  net["layers"] = n.layers;
  net["groups"] = n.groups;
  net["scale_s"] = n.scale_s;
  net["scale_m"] = n.scale_m;
  net["hidden"] = n.hidden;
  net["classes"] = n.classes;
  net["task"] = std::string(task_name(n.task));
  net["dropout"] = n.dropout;
  j["network"] = std::move(net);

  const SearchConfig& s = cfg.search;
  ojson sj;
  sj["epochs"] = s.epochs;
  sj["batch_size"] = s.batch_size;
  sj["train_fraction"] = s.train_fraction;
  sj["alpha_lr"] = s.alpha_lr;
  sj["alpha_beta1"] = s.alpha_beta1;
  sj["alpha_beta2"] = s.alpha_beta2;
  sj["alpha_eps"] = s.alpha_eps;
  sj["alpha_weight_decay"] = s.alpha_weight_decay;
  sj["alpha_init_sigma"] = s.alpha_init_sigma;
  sj["w_lr"] = s.w_lr;
  sj["w_lr_min"] = s.w_lr_min;
  sj["w_momentum"] = s.w_momentum;
  sj["w_weight_decay"] = s.w_weight_decay;
  sj["grad_clip"] = s.grad_clip;
  sj["seed"] = s.seed;
  j["search"] = std::move(sj);

  const TrainConfig& t = cfg.train;
  ojson tj;
  tj["epochs"] = t.epochs;
  tj["batch_size"] = t.batch_size;
  tj["lr"] = t.lr;
  tj["beta1"] = t.beta1;
  tj["beta2"] = t.beta2;
  tj["eps"] = t.eps;
  tj["weight_decay"] = t.weight_decay;
  tj["seed"] = t.seed;
  tj["checkpoint_every"] = t.checkpoint_every;
  j["train"] = std::move(tj);

  j["synth"] = synth_object(cfg.synth);
  return j.dump(2) + "\n";
}

NetworkConfig resolve_network(const RunConfig& cfg, const Dataset& data) {
  NetworkConfig n = cfg.network;
  const TaskType data_task =
      data.label_mode == LabelMode::kMultiLabel ? TaskType::kMultiLabel : TaskType::kSingleLabel;
  auto take = [&](const char* key, std::size_t& field, std::size_t value) {
    if (!cfg.network_keys.count(key)) {
      field = value;
    } else if (field != value) {
      throw ConfigError("network." + std::string(key) + " = " + std::to_string(field) +
                        " disagrees with the dataset (" + std::to_string(value) + ")");
    }
  };
  take("channels", n.channels, data.channels);
  take("timesteps", n.timesteps, data.timesteps);
  take("height", n.height, data.height);
  take("width", n.width, data.width);
  take("classes", n.classes, data.classes);
  if (!cfg.network_keys.count("task")) {
    n.task = data_task;
  } else if (n.task != data_task) {
    throw ConfigError("network.task disagrees with the dataset label mode");
  }
  validate_network_config(n);
  return n;
}

}  // namespace nastc
