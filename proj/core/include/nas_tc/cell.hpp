// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Cell template: two inputs (I_{k-2}, I_{k-1}), four intermediate nodes
// B0..B3, output = concat(B0..B3). Node indices used throughout:
//   0 = I_{k-2}, 1 = I_{k-1}, 2 + j = B_j.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nas_tc/op_space.hpp"

namespace nastc {

inline constexpr int kCellInputs = 2;
inline constexpr int kCellNodes = 4;
inline constexpr std::size_t kCellEdges = 14;  // 2 + 3 + 4 + 5
inline constexpr std::string_view kSchemaVersion = "nas-tc/1";

// Flat index of the edge pred -> B_node.
std::size_t edge_index(int node, int pred);

using AlphaRow = std::array<double, kNumOps>;

// Architecture weights alpha: one trainable length-9 vector per edge.
class CellArch {
 public:
  CellArch();  // all-zero alphas
  // Gaussian N(0, sigma^2) initialisation.
  CellArch(std::mt19937_64& rng, double sigma);
  explicit CellArch(const std::vector<AlphaRow>& rows);

  CellArch(const CellArch&) = delete;
  CellArch& operator=(const CellArch&) = delete;
  CellArch(CellArch&&) = default;
  CellArch& operator=(CellArch&&) = default;

  Parameter& edge(std::size_t e) { return *alphas_.at(e); }
  std::span<const double> alpha(std::size_t e) const {
    return alphas_.at(e)->value().data();
  }
  std::vector<Parameter*> parameters();
  std::vector<AlphaRow> rows() const;

  // softmax(alpha_e) as graph nodes, one per edge.
  std::vector<Variable> softmax_weights();

 private:
  std::vector<std::unique_ptr<Parameter>> alphas_;
};

std::string serialize_arch(const CellArch& arch);
CellArch parse_arch(std::string_view text);

struct GenotypeEdge {
  int pred = 0;
  OpKind op = OpKind::kIdentity;
  friend bool operator==(const GenotypeEdge&, const GenotypeEdge&) = default;
};

struct GenotypeMeta {
  std::optional<std::uint64_t> seed;
  std::optional<int> epoch;
  std::string dataset;
  friend bool operator==(const GenotypeMeta&, const GenotypeMeta&) = default;
};

struct Genotype {
  std::array<std::array<GenotypeEdge, 2>, kCellNodes> nodes{};
  GenotypeMeta meta;
  friend bool operator==(const Genotype&, const Genotype&) = default;
};

// Throws ConfigError for forward references, repeated predecessors, or Zero ops.
void validate_genotype(const Genotype& g);

// Per node: rank incoming edges by their strongest non-Zero softmax weight,
// keep the top two. Ties go to the lower predecessor index.
Genotype derive_genotype(const CellArch& arch);

std::string serialize_genotype(const Genotype& g);
// Throws ParseError naming the offending JSON pointer.
Genotype parse_genotype(std::string_view text);

// Longest chain of ReLU-Conv-BN units needed to produce each B_j.
std::array<int, kCellNodes> unit_operation_depths(const Genotype& g);

// ReLU -> pointwise 1x1 -> BatchNorm; reduces a cell input to the cell width.
class ProjectionUnit : public Module {
 public:
  ProjectionUnit(const std::string& name, std::size_t in_channels,
                 std::size_t out_channels, bool affine, std::mt19937_64& rng);

  Variable forward(const Variable& x, const ForwardContext& ctx);

  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

 private:
  Parameter weight_;
  BatchNorm bn_;
};

class Cell : public Module {
 public:
  // Relaxed cell: a MixedEdge on each of the 14 edges.
  Cell(const std::string& name, std::size_t prev2_channels,
       std::size_t prev1_channels, std::size_t width, bool affine,
       std::mt19937_64& rng);
  // Discrete cell: exactly the eight ops named by `genotype`.
  Cell(const std::string& name, std::size_t prev2_channels,
       std::size_t prev1_channels, std::size_t width, const Genotype& genotype,
       bool affine, std::mt19937_64& rng);

  bool relaxed() const { return relaxed_; }
  std::size_t width() const { return width_; }
  std::size_t out_channels() const { return kCellNodes * width_; }
  const Genotype& genotype() const { return genotype_; }

  // `arch_weights` (one softmax vector per edge) is required for relaxed
  // cells and ignored for discrete ones.
  Variable forward(const Variable& prev2, const Variable& prev1,
                   const ForwardContext& ctx,
                   std::span<const Variable> arch_weights = {});

  // Copies projection weights and the genotype's chosen ops from a relaxed
  // cell of identical widths into this discrete cell.
  void copy_chosen_weights_from(Cell& relaxed);

  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<NamedTensor>& out) override;

 private:
  bool relaxed_;
  std::size_t width_;
  Genotype genotype_;
  ProjectionUnit pre0_;
  ProjectionUnit pre1_;
  std::vector<std::unique_ptr<MixedEdge>> edges_;           // relaxed
  std::vector<std::array<std::unique_ptr<Block>, 2>> ops_;  // discrete
};

}  // namespace nastc
