// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "nas_tc/errors.hpp"
#include "nas_tc/network.hpp"
#include "nas_tc/weights_io.hpp"
#include "oracles/oracles.hpp"
#include "unit/test_util.hpp"

namespace nastc {
namespace {

std::vector<WeightEntry> random_entries(std::mt19937_64& rng) {
  std::vector<WeightEntry> out;
  std::normal_distribution<float> dist(0.0f, 1.0f);
  const std::size_t n = rng() % 6;
  for (std::size_t i = 0; i < n; ++i) {
    WeightEntry e;
    e.name = "t" + std::to_string(i) + std::string(rng() % 5, 'x');
    const std::size_t rank = rng() % 4;
    for (std::size_t r = 0; r < rank; ++r) e.shape.push_back(rng() % 4);
    e.values.resize(shape_size(e.shape));
    for (float& v : e.values) v = dist(rng);
    out.push_back(std::move(e));
  }
  return out;
}

NetworkConfig small_net() {
  NetworkConfig cfg;
  cfg.channels = 12;
  cfg.timesteps = 8;
  cfg.height = 1;
  cfg.width = 1;
  cfg.layers = 2;
  cfg.groups = 2;
  cfg.hidden = 6;
  cfg.classes = 3;
  return cfg;
}

TEST(Ntcw, RoundTripIsByteExact) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto entries = random_entries(rng);
    const std::string bytes = serialize_weights(entries);
    const auto back = parse_weights(bytes);
    EXPECT_EQ(back, entries);
    EXPECT_EQ(serialize_weights(back), bytes);
  }
}

TEST(Ntcw, Layout) {
  const std::string bytes = serialize_weights({WeightEntry{"ab", {2, 1}, {1.0f, -2.0f}}});
  EXPECT_EQ(bytes.substr(0, 4), "NTCW");
  EXPECT_EQ(bytes.size(), 4u + 4 + (4 + 2) + (4 + 8) + 8);
  // 1.0f little-endian.
  EXPECT_EQ(bytes.substr(26, 4), std::string("\x00\x00\x80\x3f", 4));
}

TEST(Ntcw, CorruptFiles) {
  const std::string bytes = serialize_weights({WeightEntry{"ab", {2, 1}, {1.0f, -2.0f}}});
  std::string magic = bytes;
  magic[3] = 'X';
  try {
    parse_weights(magic);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  std::string version = bytes;
  version[4] = 2;
  try {
    parse_weights(version);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
  for (std::size_t cut = 5; cut < bytes.size(); ++cut) {
    if (cut == 8) continue;  // header only: an empty but valid file
    EXPECT_THROW(parse_weights(bytes.substr(0, cut)), FormatError) << cut;
  }
  EXPECT_TRUE(parse_weights(bytes.substr(0, 8)).empty());
  EXPECT_THROW(parse_weights(bytes + bytes.substr(8)), FormatError);  // duplicate name
}

TEST(Ntcw, NetworkSaveLoadRestoresEverything) {
  std::mt19937_64 rng(2);
  testutil::TempDir dir;
  const Genotype g = testutil::fixture_genotype();
  NasTcNetwork a(small_net(), g, 1);
  // Run a training-mode forward so BatchNorm running stats move off their init.
  a.forward(oracle::random_tensor({4, 12, 8, 1, 1}, rng), {true, &rng});
  save_weights(dir / "w.ntcw", a);

  NasTcNetwork b(small_net(), g, 99);
  EXPECT_NE(snapshot_weights(a), snapshot_weights(b));
  load_weights(dir / "w.ntcw", b);
  EXPECT_EQ(snapshot_weights(a), snapshot_weights(b));
  EXPECT_EQ(serialize_weights(snapshot_weights(b)), read_file(dir / "w.ntcw"));

  // Equal snapshots give equal eval-mode outputs up to float rounding of a's weights.
  NasTcNetwork c(small_net(), g, 5);
  restore_weights(c, snapshot_weights(a));
  const Tensor x = oracle::random_tensor({2, 12, 8, 1, 1}, rng);
  EXPECT_EQ(b.forward(x, {false, nullptr}).value(), c.forward(x, {false, nullptr}).value());
}

TEST(Ntcw, RestoreRejectsMismatches) {
  const Genotype g = testutil::fixture_genotype();
  NasTcNetwork net(small_net(), g, 1);
  auto entries = snapshot_weights(net);
  auto missing = entries;
  missing.pop_back();
  EXPECT_THROW(restore_weights(net, missing), ConfigError);
  auto extra = entries;
  extra.push_back(WeightEntry{"stray", {1}, {0.0f}});
  EXPECT_THROW(restore_weights(net, extra), ConfigError);
  auto reshaped = entries;
  reshaped[0].shape = {reshaped[0].values.size()};
  EXPECT_THROW(restore_weights(net, reshaped), ConfigError);

  NetworkConfig other = small_net();
  other.hidden = 7;
  NasTcNetwork wrong(other, g, 1);
  EXPECT_THROW(restore_weights(wrong, entries), ConfigError);
}

TEST(Ntcw, MissingFileIsIoErrorNamingPath) {
  testutil::TempDir dir;
  NasTcNetwork net(small_net(), testutil::fixture_genotype(), 1);
  try {
    load_weights(dir / "missing.bin", net);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.bin"), std::string::npos);
  }
}

}  // namespace
}  // namespace nastc
