// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/param_audit.hpp"

#include <cmath>
#include <cstdio>

#include "nas_tc/errors.hpp"

namespace nastc {

std::vector<std::string> TimeceptionAssumptions::describe() const {
  char buf[256];
  std::vector<std::string> out;
  std::snprintf(buf, sizeof buf, "timeception: groups N = %zu, expansion = %.4g, branches = %zu",
                groups, expansion, branches);
  out.emplace_back(buf);
  std::snprintf(buf, sizeof buf,
                "timeception: branch width b = floor(C * %.4g / (%zu * %zu)); dense b->b "
                "temporal kernels %zu, %zu, %zu; one max-pool and one pointwise-only branch",
                expansion, branches, groups, kernels[0], kernels[1], kernels[2]);
  out.emplace_back(buf);
  out.emplace_back(std::string("timeception: BatchNorm(b) per branch") +
                   (output_bn ? ", BatchNorm on the concatenated output" : ""));
  return out;
}

TimeceptionLayerCount count_timeception_layer(std::size_t in_channels,
                                              const TimeceptionAssumptions& a) {
  if (a.groups == 0 || a.branches < 4 || !(a.expansion > 0)) {
    throw ConfigError("timeception assumptions: need groups >= 1, branches >= 4, expansion > 0");
  }
  if (in_channels % a.groups != 0) {
    throw ConfigError("timeception layer: C = " + std::to_string(in_channels) +
                      " not divisible by N = " + std::to_string(a.groups));
  }
  TimeceptionLayerCount c;
  c.in_channels = in_channels;
  c.branch_width = static_cast<std::size_t>(
      std::floor(static_cast<double>(in_channels) * a.expansion /
                 static_cast<double>(a.branches * a.groups)));
  if (c.branch_width == 0) throw ConfigError("timeception layer: branch width is 0");
  const std::size_t b = c.branch_width;
  const std::size_t cg = in_channels / a.groups;
  c.out_channels = a.groups * a.branches * b;
  c.pointwise = a.groups * a.branches * cg * b;
  std::size_t ksum = 0;
  for (std::size_t k : a.kernels) ksum += k;
  c.temporal = a.groups * ksum * b * b;
  c.branch_bn = a.groups * a.branches * 2 * b;
  c.output_bn = a.output_bn ? 2 * c.out_channels : 0;
  c.total = c.pointwise + c.temporal + c.branch_bn + c.output_bn;
  return c;
}

std::size_t count_nas_tc_layer(std::size_t in_channels, std::size_t skip_channels,
                               std::size_t groups, std::size_t m, const Genotype& genotype,
                               bool affine) {
  if (groups == 0 || in_channels % groups != 0 || skip_channels % groups != 0) {
    throw ConfigError("nas-tc layer: channels not divisible by N");
  }
  const std::size_t w = cell_width(in_channels, groups, m);
  return groups * count_cell_parameters(skip_channels / groups, in_channels / groups, w,
                                        genotype, affine);
}

AuditReport audit(std::size_t l_max, const NetworkConfig& base, const Genotype& genotype,
                  const TimeceptionAssumptions& tc) {
  validate_genotype(genotype);
  AuditReport r;
  r.network = base;
  r.timeception = tc;
  r.first_timeception_layer = count_timeception_layer(base.channels, tc);

  for (std::size_t l = 0; l <= l_max; ++l) {
    NetworkConfig cfg = base;
    cfg.layers = l;
    cfg.timesteps = std::size_t{1} << l;  // counts do not depend on T
    const ParameterCount nas = count_parameters(cfg, genotype);

    AuditRow row;
    row.layers = l;
    row.nas_tc_layers = nas.tc_layers;
    row.nas_tc_classifier = nas.classifier;
    std::size_t c = base.channels;
    for (std::size_t k = 0; k < l; ++k) {
      const TimeceptionLayerCount t = count_timeception_layer(c, tc);
      row.timeception_layers += t.total;
      c = t.out_channels;
    }
    row.timeception_classifier = base.hidden * c + base.hidden + base.classes * base.hidden +
                                 base.classes;
    row.nas_tc_total = row.nas_tc_layers + row.nas_tc_classifier;
    row.timeception_total = row.timeception_layers + row.timeception_classifier;
    row.reduction = row.timeception_layers == 0
                        ? 0.0
                        : 1.0 - static_cast<double>(row.nas_tc_layers) /
                                    static_cast<double>(row.timeception_layers);
    r.rows.push_back(row);
  }

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "nas-tc: C = %zu, N = %zu, S = %zu, M = %zu, cell width floor((C/N)/M), "
                "independent cell weights per group, BatchNorm affine",
                base.channels, base.groups, base.scale_s, base.scale_m);
  r.assumptions.emplace_back(buf);
  r.assumptions.emplace_back(
      "nas-tc: I_{k-2} of layer 1 is the backbone feature; later layers use the previous "
      "layer's input");
  std::snprintf(buf, sizeof buf,
                "classifier: GAP -> dense(%zu) -> ReLU -> dropout -> dense(%zu), with biases",
                base.hidden, base.classes);
  r.assumptions.emplace_back(buf);
  for (std::string& s : tc.describe()) r.assumptions.push_back(std::move(s));
  r.assumptions.emplace_back("TC-layer counts exclude the classifier; totals include it");
  return r;
}

std::string audit_csv(const AuditReport& r) {
  std::string out = "layers,nas_tc_params,timeception_params\n";
  for (const AuditRow& row : r.rows) {
    out += std::to_string(row.layers) + "," + std::to_string(row.nas_tc_total) + "," +
           std::to_string(row.timeception_total) + "\n";
  }
  return out;
}

std::string audit_text(const AuditReport& r) {
  std::string out;
  char buf[256];
  out += "assumptions:\n";
  for (const std::string& a : r.assumptions) out += "  - " + a + "\n";
  const TimeceptionLayerCount& t = r.first_timeception_layer;
  std::snprintf(buf, sizeof buf,
                "\ntimeception layer at C = %zu: pointwise %zu, temporal %zu, branch BN %zu, "
                "output BN %zu; pointwise share of branches %.1f%%\n\n",
                t.in_channels, t.pointwise, t.temporal, t.branch_bn, t.output_bn,
                100.0 * t.pointwise_share());
  out += buf;
  std::snprintf(buf, sizeof buf, "%6s  %14s  %14s  %14s  %14s  %9s\n", "layers", "nas_tc_tc",
                "timeception_tc", "nas_tc_total", "tc_total", "reduction");
  out += buf;
  for (const AuditRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%6zu  %14zu  %14zu  %14zu  %14zu  %8.1f%%\n", row.layers,
                  row.nas_tc_layers, row.timeception_layers, row.nas_tc_total,
                  row.timeception_total, 100.0 * row.reduction);
    out += buf;
  }
  return out;
}

}  // namespace nastc
