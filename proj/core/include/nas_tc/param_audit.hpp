// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic parameter accounting: NAS-TC layers versus a reference model of
// Timeception's Temporal Conv Module.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "nas_tc/network.hpp"

namespace nastc {

// Reference Temporal Conv Module, per channel group of C/N input channels:
//   branch i in {0, 1, 2}: pointwise C/N -> b, dense temporal conv b -> b
//                          with kernel kernels[i], BatchNorm(b)
//   branch 3:              pointwise C/N -> b, temporal max-pool, BatchNorm(b)
//   branch 4:              pointwise C/N -> b, BatchNorm(b)
// with b = floor(C * expansion / (branches * N)); the layer concatenates all
// groups (N * branches * b channels) and applies one BatchNorm to the result.
struct TimeceptionAssumptions {
  std::size_t groups = 8;
  double expansion = 1.25;
  std::size_t branches = 5;
  std::array<std::size_t, 3> kernels{3, 5, 7};
  bool output_bn = true;

  std::vector<std::string> describe() const;
};

struct TimeceptionLayerCount {
  std::size_t in_channels = 0;
  std::size_t branch_width = 0;
  std::size_t out_channels = 0;
  std::size_t pointwise = 0;  // all five branches, all groups
  std::size_t temporal = 0;
  std::size_t branch_bn = 0;
  std::size_t output_bn = 0;
  std::size_t total = 0;

  std::size_t branches_total() const { return pointwise + temporal + branch_bn; }
  // Pointwise share of the branch parameters.
  double pointwise_share() const {
    return static_cast<double>(pointwise) / static_cast<double>(branches_total());
  }
};

TimeceptionLayerCount count_timeception_layer(std::size_t in_channels,
                                              const TimeceptionAssumptions& a = {});

// groups * (two input projections + the genotype's eight ops).
std::size_t count_nas_tc_layer(std::size_t in_channels, std::size_t skip_channels,
                               std::size_t groups, std::size_t m, const Genotype& genotype,
                               bool affine = true);

struct AuditRow {
  std::size_t layers = 0;
  std::size_t nas_tc_layers = 0;       // TC-layer parameters only
  std::size_t timeception_layers = 0;
  std::size_t nas_tc_classifier = 0;
  std::size_t timeception_classifier = 0;
  std::size_t nas_tc_total = 0;        // TC layers + classifier
  std::size_t timeception_total = 0;
  double reduction = 0.0;  // 1 - nas_tc_layers / timeception_layers (0 at L = 0)
};

struct AuditReport {
  NetworkConfig network;
  TimeceptionAssumptions timeception;
  std::vector<AuditRow> rows;  // L = 0 .. l_max
  TimeceptionLayerCount first_timeception_layer;
  std::vector<std::string> assumptions;
};

// Counts for L = 0..l_max. `base` supplies C, H, W, N, M, hidden and K; T is
// irrelevant to the counts and is ignored.
AuditReport audit(std::size_t l_max, const NetworkConfig& base, const Genotype& genotype,
                  const TimeceptionAssumptions& tc = {});

// Header "layers,nas_tc_params,timeception_params"; totals including the
// classifier, so L = 0 gives the classifier-only count for both models.
std::string audit_csv(const AuditReport& r);
std::string audit_text(const AuditReport& r);

}  // namespace nastc
