// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Feature datasets, the "NTCF" container, superframe segmentation, and the
// planted-motif synthetic generator.
//
// NTCF layout (little-endian):
//   magic "NTCF" | u32 version | u32 count, C, T, H, W, K | u8 label_mode
//   per record: u32 id_len | id (UTF-8) | f32 features[C*T*H*W] | u8 labels[K]

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nas_tc/tensor.hpp"

namespace nastc {

inline constexpr std::uint32_t kFeaturesVersion = 1;

enum class LabelMode : std::uint8_t { kMultiLabel = 0, kSingleLabel = 1 };

struct FeatureRecord {
  std::string id;
  std::vector<float> features;       // (C, T, H, W) row-major
  std::vector<std::uint8_t> labels;  // K entries in {0, 1}
  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct Dataset {
  std::size_t channels = 0;
  std::size_t timesteps = 0;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t classes = 0;
  LabelMode label_mode = LabelMode::kMultiLabel;
  std::vector<FeatureRecord> records;

  std::size_t size() const { return records.size(); }
  std::size_t feature_size() const { return channels * timesteps * height * width; }
  // Throws ConfigError on any record/header disagreement or bad label.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::string serialize_features(const Dataset& d);
// Throws FormatError with the byte offset of the first problem.
Dataset parse_features(std::string_view bytes);
void write_features(const std::filesystem::path& path, const Dataset& d);
Dataset load_features(const std::filesystem::path& path);

// (n, C, T, H, W) and (n, K) tensors for the records at `indices`.
Tensor batch_features(const Dataset& d, std::span<const std::size_t> indices);
Tensor batch_labels(const Dataset& d, std::span<const std::size_t> indices);

Dataset subset(const Dataset& d, std::span<const std::size_t> indices);
// Deterministic shuffle, first round(fraction * n) records go to the first set.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double fraction,
                                          std::uint64_t seed);

struct FrameRange {
  std::size_t begin;  // inclusive
  std::size_t end;    // exclusive
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

inline constexpr std::size_t kSuperframeLength = 8;

// T equal segments of a t_frames-long video; each yields the 8 consecutive
// frames centred in it. Throws ConfigError if t_frames < 8 * T.
std::vector<FrameRange> segment_video_frames(std::size_t t_frames, std::size_t timesteps);

// A train of unit-width bumps at onset, onset + period, ... (< onset + duration)
// on every listed channel.
struct Motif {
  std::vector<std::size_t> channels;
  std::size_t period = 2;
  std::size_t duration = 1;
  double amplitude = 1.0;
  friend bool operator==(const Motif&, const Motif&) = default;
};

struct SynthSpec {
  std::size_t classes = 4;
  std::size_t samples_per_class = 125;
  std::size_t channels = 16;
  std::size_t timesteps = 32;
  std::size_t height = 1;
  std::size_t width = 1;
  LabelMode label_mode = LabelMode::kMultiLabel;
  // Probability that each non-primary class is also active in a sample.
  double overlap = 0.0;
  double noise = 0.4;
  // Expected number of label-free bump trains injected per sample.
  double distractors = 0.0;
  std::vector<std::size_t> distractor_periods;
  std::vector<std::vector<Motif>> motifs;  // one library per class
  std::uint64_t seed = 0;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

// Default library: class k is a pair of bumps on channels 0..3 spaced
// g_k = step * (k + 1) apart, step = min(4, (T - 1) / K). Classes differ only
// in the spacing, so telling them apart needs a temporal receptive field of
// about the largest spacing.
std::vector<std::vector<Motif>> default_motif_library(std::size_t classes,
                                                      std::size_t channels,
                                                      std::size_t timesteps);

// Throws ConfigError for motifs longer than T, periods < 2, or bad channels.
void validate_synth_spec(const SynthSpec& spec);

// Sample i has primary class i mod K. Deterministic in spec.seed.
Dataset generate_synthetic(const SynthSpec& spec);

}  // namespace nastc
