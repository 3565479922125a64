// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binary.hpp"
#include "nas_tc/errors.hpp"
#include "nas_tc/file_io.hpp"

namespace nastc {

namespace {

constexpr std::string_view kMagic = "NTCF";

void check_labels(const std::vector<std::uint8_t>& labels, LabelMode mode,
                  const std::string& where) {
  std::size_t ones = 0;
  for (std::uint8_t v : labels) {
    if (v > 1) throw ConfigError(where + ": label byte " + std::to_string(v) + " is not 0/1");
    ones += v;
  }
  if (mode == LabelMode::kSingleLabel && ones != 1) {
    throw ConfigError(where + ": single-label record has " + std::to_string(ones) +
                      " active classes");
  }
}

}  // namespace

void Dataset::validate() const {
  if (channels == 0 || timesteps == 0 || height == 0 || width == 0 || classes == 0) {
    throw ConfigError("dataset: C, T, H, W and K must all be >= 1");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FeatureRecord& r = records[i];
    const std::string where = "dataset record " + std::to_string(i) + " (" + r.id + ")";
    if (r.features.size() != feature_size()) {
      throw ConfigError(where + ": " + std::to_string(r.features.size()) +
                        " feature values, header implies " + std::to_string(feature_size()));
    }
    if (r.labels.size() != classes) {
      throw ConfigError(where + ": " + std::to_string(r.labels.size()) +
                        " labels, header declares K = " + std::to_string(classes));
    }
    check_labels(r.labels, label_mode, where);
  }
}

std::string serialize_features(const Dataset& d) {
  d.validate();
  std::string out;
  out.reserve(32 + d.size() * (d.feature_size() * 4 + d.classes + 16));
  binary::put_bytes(out, kMagic);
  binary::put_u32(out, kFeaturesVersion);
  for (std::size_t v : {d.size(), d.channels, d.timesteps, d.height, d.width, d.classes}) {
    binary::put_u32(out, static_cast<std::uint32_t>(v));
  }
  out.push_back(static_cast<char>(d.label_mode));
  for (const FeatureRecord& r : d.records) {
    binary::put_u32(out, static_cast<std::uint32_t>(r.id.size()));
    binary::put_bytes(out, r.id);
    for (float v : r.features) binary::put_f32(out, v);
    for (std::uint8_t v : r.labels) out.push_back(static_cast<char>(v));
  }
  return out;
}

Dataset parse_features(std::string_view bytes) {
  binary::Reader r(bytes);
  if (r.bytes(4, "magic") != kMagic) throw FormatError(0, "bad magic, expected \"NTCF\"");
  const std::uint64_t vpos = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kFeaturesVersion) {
    throw FormatError(vpos, "unsupported version " + std::to_string(version));
  }
  Dataset d;
  const std::uint32_t count = r.u32("header");
  d.channels = r.u32("header");
  d.timesteps = r.u32("header");
  d.height = r.u32("header");
  d.width = r.u32("header");
  d.classes = r.u32("header");
  const std::uint64_t mpos = r.offset();
  const std::uint8_t mode = r.u8("header");
  if (mode > 1) throw FormatError(mpos, "unknown label mode " + std::to_string(mode));
  d.label_mode = static_cast<LabelMode>(mode);
  if (d.channels == 0 || d.timesteps == 0 || d.height == 0 || d.width == 0 ||
      d.classes == 0) {
    throw FormatError(vpos + 4, "header dims must all be >= 1");
  }

  const std::uint64_t values =
      static_cast<std::uint64_t>(d.channels) * d.timesteps * d.height * d.width;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t start = r.offset();
    FeatureRecord rec;
    const std::uint32_t len = r.u32("record id length");
    rec.id = std::string(r.bytes(len, "record id"));
    const std::uint64_t need = values * 4 + d.classes;
    if (r.remaining() < need) {
      throw FormatError(r.offset(), "record " + std::to_string(i) + " truncated: expected " +
                                        std::to_string(need) + " bytes of features+labels, " +
                                        std::to_string(r.remaining()) + " available");
    }
    rec.features.reserve(values);
    for (std::uint64_t k = 0; k < values; ++k) rec.features.push_back(r.f32("features"));
    const std::uint64_t lpos = r.offset();
    rec.labels.reserve(d.classes);
    for (std::size_t k = 0; k < d.classes; ++k) rec.labels.push_back(r.u8("labels"));
    try {
      check_labels(rec.labels, d.label_mode, "record " + std::to_string(i));
    } catch (const ConfigError& e) {
      throw FormatError(lpos, e.what());
    }
    (void)start;
    d.records.push_back(std::move(rec));
  }
  if (!r.at_end()) {
    throw FormatError(r.offset(), std::to_string(r.remaining()) +
                                      " trailing bytes after " + std::to_string(count) +
                                      " records; header dims disagree with record size");
  }
  return d;
}

void write_features(const std::filesystem::path& path, const Dataset& d) {
  write_file_atomic(path, serialize_features(d));
}

Dataset load_features(const std::filesystem::path& path) {
  return parse_features(read_file(path));
}

Tensor batch_features(const Dataset& d, std::span<const std::size_t> indices) {
  const std::size_t fs = d.feature_size();
  Tensor out = Tensor::feature(indices.size(), d.channels, d.timesteps, d.height, d.width);
  std::span<Scalar> dst = out.data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const FeatureRecord& r = d.records.at(indices[b]);
    std::copy(r.features.begin(), r.features.end(), dst.begin() + static_cast<std::ptrdiff_t>(b * fs));
  }
  return out;
}

Tensor batch_labels(const Dataset& d, std::span<const std::size_t> indices) {
  Tensor out({indices.size(), d.classes});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const FeatureRecord& r = d.records.at(indices[b]);
    for (std::size_t k = 0; k < d.classes; ++k) out[b * d.classes + k] = r.labels[k];
  }
  return out;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
  Dataset out = d;
  out.records.clear();
  for (std::size_t i : indices) out.records.push_back(d.records.at(i));
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_first =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.size())));
  const std::span<const std::size_t> all(idx);
  return {subset(d, all.first(n_first)), subset(d, all.subspan(n_first))};
}

std::vector<FrameRange> segment_video_frames(std::size_t t_frames, std::size_t timesteps) {
  if (timesteps == 0) throw ConfigError("segment_video_frames: T must be >= 1");
  if (t_frames < kSuperframeLength * timesteps) {
    throw ConfigError("segment_video_frames: " + std::to_string(t_frames) +
                      " frames is fewer than 8 * T = " +
                      std::to_string(kSuperframeLength * timesteps));
  }
  std::vector<FrameRange> out;
  out.reserve(timesteps);
  for (std::size_t i = 0; i < timesteps; ++i) {
    const std::size_t seg_begin = i * t_frames / timesteps;
    const std::size_t seg_end = (i + 1) * t_frames / timesteps;
    const std::size_t begin = seg_begin + (seg_end - seg_begin - kSuperframeLength) / 2;
    out.push_back({begin, begin + kSuperframeLength});
  }
  return out;
}

std::vector<std::vector<Motif>> default_motif_library(std::size_t classes,
                                                      std::size_t channels,
                                                      std::size_t timesteps) {
  if (classes == 0 || channels == 0 || timesteps < 2) {
    throw ConfigError("synth spec: default motifs need K >= 1, C >= 1, T >= 2");
  }
  const std::size_t step = std::min<std::size_t>(4, (timesteps - 1) / classes);
  if (step < 2) {
    throw ConfigError("synth spec: T = " + std::to_string(timesteps) + " too short for " +
                      std::to_string(classes) + " default motifs (need T >= 2K + 1)");
  }
  std::vector<std::size_t> shared(std::min<std::size_t>(channels, 4));
  std::iota(shared.begin(), shared.end(), std::size_t{0});
  std::vector<std::vector<Motif>> lib;
  for (std::size_t k = 0; k < classes; ++k) {
    const std::size_t gap = step * (k + 1);
    lib.push_back({Motif{shared, gap, gap + 1, 1.0}});
  }
  return lib;
}

void validate_synth_spec(const SynthSpec& spec) {
  auto fail = [](const std::string& msg) { throw ConfigError("synth spec: " + msg); };
  if (spec.classes == 0) fail("classes must be >= 1");
  if (spec.samples_per_class == 0) fail("samples_per_class must be >= 1");
  if (spec.channels == 0 || spec.timesteps == 0 || spec.height == 0 || spec.width == 0) {
    fail("dims (C, T, H, W) must all be >= 1");
  }
  if (!(spec.overlap >= 0.0 && spec.overlap <= 1.0)) fail("overlap must lie in [0, 1]");
  if (spec.label_mode == LabelMode::kSingleLabel && spec.overlap != 0.0) {
    fail("single-label datasets require overlap = 0");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) fail("noise must be >= 0");
  if (!(spec.distractors >= 0.0) || !std::isfinite(spec.distractors)) {
    fail("distractors must be >= 0");
  }
  if (spec.distractors > 0.0 && spec.distractor_periods.empty()) {
    fail("distractors > 0 needs at least one distractor period");
  }
  for (std::size_t p : spec.distractor_periods) {
    if (p < 2) fail("distractor periods must be >= 2");
    if (3 * p + 1 > spec.timesteps) fail("distractor period " + std::to_string(p) + " too long for T");
  }
  if (spec.motifs.size() != spec.classes) {
    fail("motif library has " + std::to_string(spec.motifs.size()) + " entries for " +
         std::to_string(spec.classes) + " classes");
  }
  for (std::size_t k = 0; k < spec.motifs.size(); ++k) {
    const std::string where = "class " + std::to_string(k);
    if (spec.motifs[k].empty()) fail(where + " has no motif");
    for (const Motif& m : spec.motifs[k]) {
      if (m.period < 2) fail(where + ": motif period must be >= 2");
      if (m.duration == 0) fail(where + ": motif duration must be >= 1");
      if (m.duration > spec.timesteps) {
        fail(where + ": motif duration " + std::to_string(m.duration) + " exceeds T = " +
             std::to_string(spec.timesteps));
      }
      if (m.channels.empty()) fail(where + ": motif has no channels");
      for (std::size_t c : m.channels) {
        if (c >= spec.channels) fail(where + ": motif channel " + std::to_string(c) + " >= C");
      }
      if (!std::isfinite(m.amplitude)) fail(where + ": amplitude must be finite");
    }
  }
}

namespace {

void inject(std::vector<double>& x, const SynthSpec& spec, const Motif& m,
            std::size_t onset) {
  const std::size_t hw = spec.height * spec.width;
  for (std::size_t t = onset; t < onset + m.duration; t += m.period) {
    for (std::size_t c : m.channels) {
      double* p = x.data() + (c * spec.timesteps + t) * hw;
      for (std::size_t s = 0; s < hw; ++s) p[s] += m.amplitude;
    }
  }
}

}  // namespace

Dataset generate_synthetic(const SynthSpec& spec) {
  validate_synth_spec(spec);
  Dataset d;
  d.channels = spec.channels;
  d.timesteps = spec.timesteps;
  d.height = spec.height;
  d.width = spec.width;
  d.classes = spec.classes;
  d.label_mode = spec.label_mode;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution extra(spec.overlap);
  std::poisson_distribution<int> n_distract(spec.distractors > 0 ? spec.distractors : 1.0);

  const std::size_t total = spec.classes * spec.samples_per_class;
  const std::size_t fs = d.feature_size();
  for (std::size_t i = 0; i < total; ++i) {
    FeatureRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%06zu", i);
    rec.id = id;
    rec.labels.assign(spec.classes, 0);
    const std::size_t primary = i % spec.classes;
    rec.labels[primary] = 1;
    for (std::size_t k = 0; k < spec.classes; ++k) {
      if (k != primary && spec.overlap > 0 && extra(rng)) rec.labels[k] = 1;
    }

    std::vector<double> x(fs, 0.0);
    if (spec.noise > 0) {
      for (double& v : x) v = spec.noise * noise(rng);
    }
    for (std::size_t k = 0; k < spec.classes; ++k) {
      if (!rec.labels[k]) continue;
      for (const Motif& m : spec.motifs[k]) {
        std::uniform_int_distribution<std::size_t> onset(0, spec.timesteps - m.duration);
        inject(x, spec, m, onset(rng));
      }
    }
    if (spec.distractors > 0) {
      const int n = n_distract(rng);
      std::uniform_int_distribution<std::size_t> pick_p(0, spec.distractor_periods.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_c(0, spec.channels - 1);
      for (int j = 0; j < n; ++j) {
        const std::size_t p = spec.distractor_periods[pick_p(rng)];
        Motif m{{pick_c(rng)}, p, 3 * p + 1, 1.0};
        std::uniform_int_distribution<std::size_t> onset(0, spec.timesteps - m.duration);
        inject(x, spec, m, onset(rng));
      }
    }
    rec.features.reserve(fs);
    for (double v : x) rec.features.push_back(static_cast<float>(v));
    d.records.push_back(std::move(rec));
  }
  return d;
}

}  // namespace nastc
