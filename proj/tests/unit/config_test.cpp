// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "nas_tc/config.hpp"
#include "nas_tc/errors.hpp"
#include "unit/test_util.hpp"

namespace nastc {
namespace {

std::string location_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.location();
  }
  return "<no error>";
}

Dataset tiny_dataset(std::size_t c, std::size_t t, std::size_t k) {
  Dataset d;
  d.channels = c;
  d.timesteps = t;
  d.classes = k;
  return d;
}

TEST(Config, Defaults) {
  const RunConfig cfg = default_config();
  EXPECT_EQ(cfg.train.epochs, 300u);
  EXPECT_EQ(cfg.train.batch_size, 18u);
  EXPECT_EQ(cfg.train.lr, 0.01);
  EXPECT_EQ(cfg.train.eps, 1e-4);
  EXPECT_EQ(cfg.search.epochs, 50u);
  EXPECT_EQ(cfg.network.scale_s, 4u);
  EXPECT_EQ(cfg.network.scale_m, 3u);
  EXPECT_EQ(cfg.network.channels, 1024u);
  EXPECT_EQ(cfg.synth.classes, 4u);
  EXPECT_EQ(cfg.synth.motifs.size(), 4u);
  EXPECT_NO_THROW(validate_synth_spec(cfg.synth));
  EXPECT_TRUE(cfg.network_keys.empty());
}

TEST(Config, EmptyDocumentIsDefaults) {
  EXPECT_EQ(config_json(parse_config("{}")), config_json(default_config()));
}

TEST(Config, ErrorsCarryJsonPointers) {
  EXPECT_EQ(location_of(R"({"train": {"epochs": -1}})"), "/train/epochs");
  EXPECT_EQ(location_of(R"({"train": {"epochs": 1.5}})"), "/train/epochs");
  EXPECT_EQ(location_of(R"({"search": {"epochs": 0}})"), "/search/epochs");
  EXPECT_EQ(location_of(R"({"network": {"layers": "three"}})"), "/network/layers");
  EXPECT_EQ(location_of(R"({"network": {"dropout": 1.0}})"), "/network/dropout");
  EXPECT_EQ(location_of(R"({"train": {"learning_rate": 0.1}})"), "/train/learning_rate");
  EXPECT_EQ(location_of(R"({"bogus": 1})"), "/bogus");
  EXPECT_EQ(location_of(R"({"network": {"task": "ranking"}})"), "/network/task");
  EXPECT_EQ(location_of(R"({"synth": {"motifs": 3}})"), "/synth/motifs");
  EXPECT_EQ(location_of(R"({"train": [1]})"), "/train");
  EXPECT_EQ(location_of("{not json"), "");
}

TEST(Config, OverridesAndKeysPresent) {
  const RunConfig cfg = parse_config(
      R"({"network": {"channels": 48, "layers": 2}, "train": {"epochs": 0, "lr": 0.5},
          "search": {"seed": 9}})");
  EXPECT_EQ(cfg.network.channels, 48u);
  EXPECT_EQ(cfg.network.layers, 2u);
  EXPECT_EQ(cfg.train.epochs, 0u);
  EXPECT_EQ(cfg.train.lr, 0.5);
  EXPECT_EQ(cfg.search.seed, 9u);
  EXPECT_EQ(cfg.network_keys, (std::set<std::string>{"channels", "layers"}));
}

TEST(Config, JsonRoundTrip) {
  RunConfig cfg = default_config();
  cfg.network.channels = 96;
  cfg.network.dropout = 0.25;
  cfg.search.alpha_lr = 1e-3;
  cfg.train.checkpoint_every = 5;
  cfg.synth.overlap = 0.3;
  cfg.synth.distractors = 1.5;
  cfg.synth.distractor_periods = {3, 5};
  const std::string text = config_json(cfg);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(config_json(back), text);
  EXPECT_EQ(back.synth, cfg.synth);
}

TEST(Config, SynthSpecRoundTrip) {
  SynthSpec spec;
  spec.classes = 3;
  spec.timesteps = 24;
  spec.motifs = default_motif_library(3, 16, 24);
  spec.seed = 42;
  const SynthSpec back = parse_synth_spec(synth_spec_json(spec));
  EXPECT_EQ(back, spec);
  try {
    parse_synth_spec(R"({"motifs": [[{"channels": [0, "x"]}]]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "/motifs/0/0/channels/1");
  }
}

TEST(Config, LoadFromFile) {
  testutil::TempDir dir;
  const std::string text = R"({"train": {"batch_size": 4}})";
  {
    std::ofstream f(dir / "c.json");
    f << text;
  }
  EXPECT_EQ(load_config(dir / "c.json").train.batch_size, 4u);
  EXPECT_THROW(load_config(dir / "absent.json"), IoError);
}

TEST(ResolveNetwork, InfersDimsFromData) {
  const RunConfig cfg = parse_config(R"({"network": {"layers": 1, "groups": 1, "hidden": 8}})");
  Dataset d = tiny_dataset(6, 8, 3);
  d.label_mode = LabelMode::kSingleLabel;
  const NetworkConfig n = resolve_network(cfg, d);
  EXPECT_EQ(n.channels, 6u);
  EXPECT_EQ(n.timesteps, 8u);
  EXPECT_EQ(n.classes, 3u);
  EXPECT_EQ(n.task, TaskType::kSingleLabel);
  EXPECT_EQ(n.hidden, 8u);
}

TEST(ResolveNetwork, ExplicitConflictsThrow) {
  const RunConfig cfg =
      parse_config(R"({"network": {"channels": 12, "layers": 1, "groups": 1}})");
  EXPECT_THROW(resolve_network(cfg, tiny_dataset(6, 8, 3)), ConfigError);
  EXPECT_NO_THROW(resolve_network(cfg, tiny_dataset(12, 8, 3)));
  const RunConfig task = parse_config(
      R"({"network": {"task": "single_label", "layers": 1, "groups": 1}})");
  EXPECT_THROW(resolve_network(task, tiny_dataset(6, 8, 3)), ConfigError);
}

}  // namespace
}  // namespace nastc
