// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "nas_tc/errors.hpp"
#include "nas_tc/param_audit.hpp"
#include "oracles/oracles.hpp"
#include "unit/test_util.hpp"

namespace nastc {
namespace {

Genotype parameter_free_genotype() {
  Genotype g;
  g.nodes[0] = {GenotypeEdge{0, OpKind::kIdentity}, {1, OpKind::kMaxPool2}};
  g.nodes[1] = {GenotypeEdge{2, OpKind::kAvgPool2}, {1, OpKind::kIdentity}};
  g.nodes[2] = {GenotypeEdge{3, OpKind::kMaxPool2}, {0, OpKind::kAvgPool2}};
  g.nodes[3] = {GenotypeEdge{4, OpKind::kIdentity}, {2, OpKind::kIdentity}};
  return g;
}

TEST(Timeception, MatchesTensorByTensorOracle) {
  for (std::size_t c = 64; c <= 2048; c += 64) {
    const TimeceptionLayerCount t = count_timeception_layer(c);
    EXPECT_EQ(t.total, oracle::timeception_layer(c)) << c;
    EXPECT_EQ(t.total, t.branches_total() + t.output_bn);
  }
}

TEST(Timeception, DefaultWidthAndPointwiseShare) {
  const TimeceptionLayerCount t = count_timeception_layer(1024);
  EXPECT_EQ(t.branch_width, 32u);
  EXPECT_EQ(t.out_channels, 1280u);
  EXPECT_EQ(t.pointwise, 5u * 1024 * 32);
  EXPECT_EQ(t.temporal, 8u * 15 * 32 * 32);
  EXPECT_NEAR(t.pointwise_share(), 0.57, 0.05);
  EXPECT_THROW(count_timeception_layer(1020), ConfigError);
}

TEST(NasTcLayerCount, ParameterFreeOpsLeaveProjectionsOnly) {
  const Genotype g = parameter_free_genotype();
  for (std::size_t c : {48u, 96u, 1024u}) {
    const std::size_t w = cell_width(c, 8, 3);
    const std::size_t projections = 8 * 2 * ((c / 8) * w + 2 * w);
    EXPECT_EQ(count_nas_tc_layer(c, c, 8, 3, g), projections);
  }
}

TEST(NasTcLayerCount, EqualsInstantiatedLayer) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t groups = 1 + rng() % 4;
    const std::size_t c = groups * (3 + rng() % 10);
    const std::size_t skip = groups * (1 + rng() % 10);
    const Genotype g = trial == 0 ? testutil::fixture_genotype() : testutil::random_genotype(rng);
    LayerConfig lc;
    lc.groups = groups;
    lc.genotype = &g;
    const std::size_t w = cell_width(c, groups, 3);
    NasTcLayer layer("l", lc, LayerShape{c, skip, w, groups * 4 * w, 4, 2}, rng);
    EXPECT_EQ(layer.parameter_count(), count_nas_tc_layer(c, skip, groups, 3, g));
  }
}

TEST(NasTcLayerCount, BelowTimeceptionAtEqualWidth) {
  const Genotype g = testutil::fixture_genotype();
  for (std::size_t c = 256; c <= 2048; c += 64) {
    EXPECT_LT(count_nas_tc_layer(c, c, 8, 3, g), count_timeception_layer(c).total) << c;
  }
}

TEST(Audit, ClassifierOnlyRowAndCsv) {
  const AuditReport r = audit(8, NetworkConfig{}, testutil::fixture_genotype());
  ASSERT_EQ(r.rows.size(), 9u);
  EXPECT_EQ(r.rows[0].nas_tc_total, 605341u);
  EXPECT_EQ(r.rows[0].timeception_total, 605341u);
  EXPECT_EQ(r.rows[0].reduction, 0.0);
  const std::string csv = audit_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layers,nas_tc_params,timeception_params");
  EXPECT_NE(csv.find("\n0,605341,605341\n"), std::string::npos);
  EXPECT_FALSE(r.assumptions.empty());
  EXPECT_NE(audit_text(r).find("expansion"), std::string::npos);
}

TEST(Audit, RowsAgreeWithNetworkCounts) {
  const Genotype g = testutil::fixture_genotype();
  const AuditReport r = audit(8, NetworkConfig{}, g);
  for (const AuditRow& row : r.rows) {
    NetworkConfig cfg;
    cfg.layers = row.layers;
    cfg.timesteps = 256;
    const ParameterCount pc = count_parameters(cfg, g);
    EXPECT_EQ(row.nas_tc_layers, pc.tc_layers);
    EXPECT_EQ(row.nas_tc_total, pc.total);
    EXPECT_EQ(row.nas_tc_total, row.nas_tc_layers + row.nas_tc_classifier);
    EXPECT_EQ(row.timeception_total, row.timeception_layers + row.timeception_classifier);
  }
}

TEST(Audit, TimeceptionStackChainsWidths) {
  const AuditReport r = audit(8, NetworkConfig{}, testutil::fixture_genotype());
  std::size_t c = 1024, sum = 0;
  for (std::size_t l = 1; l <= 8; ++l) {
    sum += oracle::timeception_layer(c);
    c = 8 * 5 * ((c * 5 / 4) / (5 * 8));
    EXPECT_EQ(r.rows[l].timeception_layers, sum);
  }
}

TEST(Audit, MonotoneInLayersAndChannels) {
  const Genotype g = testutil::fixture_genotype();
  const AuditReport r = audit(8, NetworkConfig{}, g);
  for (std::size_t l = 1; l < r.rows.size(); ++l) {
    EXPECT_GT(r.rows[l].nas_tc_total, r.rows[l - 1].nas_tc_total);
    EXPECT_GT(r.rows[l].timeception_total, r.rows[l - 1].timeception_total);
  }
  std::size_t prev_nas = 0, prev_tc = 0;
  for (std::size_t c = 256; c <= 2048; c += 256) {
    NetworkConfig cfg;
    cfg.channels = c;
    const AuditRow row = audit(3, cfg, g).rows[3];
    EXPECT_GT(row.nas_tc_total, prev_nas);
    EXPECT_GT(row.timeception_total, prev_tc);
    prev_nas = row.nas_tc_total;
    prev_tc = row.timeception_total;
  }
}

TEST(Audit, IndependentOfTimesteps) {
  const Genotype g = testutil::fixture_genotype();
  NetworkConfig a;
  NetworkConfig b;
  b.timesteps = 8;
  b.height = 1;
  b.width = 1;
  const AuditReport ra = audit(5, a, g);
  const AuditReport rb = audit(5, b, g);
  for (std::size_t l = 0; l <= 5; ++l) EXPECT_EQ(ra.rows[l].nas_tc_total, rb.rows[l].nas_tc_total);
}

}  // namespace
}  // namespace nastc
