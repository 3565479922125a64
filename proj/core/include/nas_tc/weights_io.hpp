// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// "NTCW" weight container:
//   magic "NTCW" | u32 version
//   repeated until EOF:
//     u32 name_len | name | u32 rank | u32 dims[rank] | f32 values[prod(dims)]
// All integers and floats little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nas_tc/module.hpp"

namespace nastc {

inline constexpr std::uint32_t kWeightsVersion = 1;

struct WeightEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

std::string serialize_weights(const std::vector<WeightEntry>& entries);
// Throws FormatError with the byte offset of the first problem.
std::vector<WeightEntry> parse_weights(std::string_view bytes);

// Parameters followed by buffers (BatchNorm running statistics).
std::vector<WeightEntry> snapshot_weights(Module& module);
// Every tensor of `module` must appear in `entries` with the same shape.
void restore_weights(Module& module, const std::vector<WeightEntry>& entries);

void save_weights(const std::filesystem::path& path, Module& module);
void load_weights(const std::filesystem::path& path, Module& module);

}  // namespace nastc
