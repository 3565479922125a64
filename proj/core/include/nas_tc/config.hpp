// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON run configuration:
//   { "network": {...}, "search": {...}, "train": {...}, "synth": {...} }
// Every key is optional; unknown keys are rejected.

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "nas_tc/data_io.hpp"
#include "nas_tc/network.hpp"
#include "nas_tc/search.hpp"
#include "nas_tc/train_eval.hpp"

namespace nastc {

struct RunConfig {
  NetworkConfig network;
  SearchConfig search;
  TrainConfig train;
  SynthSpec synth;
  // Network keys present in the document; the rest may be inferred from data.
  std::set<std::string> network_keys;
};

// Defaults: network dims of the Charades/I3D setting, train 300 epochs at
// batch 18 with Adam(lr 0.01, eps 1e-4), search 50 epochs, synthetic K=4,
// C=16, T=32, H=W=1.
RunConfig default_config();

// Throws ParseError whose location is a JSON pointer (e.g. "/train/epochs").
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

std::string config_json(const RunConfig& cfg);
std::string synth_spec_json(const SynthSpec& spec);
SynthSpec parse_synth_spec(std::string_view text);

// Feature dims, class count and task come from `data` unless the config set
// them; explicit values that disagree with the data throw ConfigError.
NetworkConfig resolve_network(const RunConfig& cfg, const Dataset& data);

}  // namespace nastc
