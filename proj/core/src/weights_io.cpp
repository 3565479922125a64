// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/weights_io.hpp"

#include <unordered_map>
#include <unordered_set>

#include "binary.hpp"
#include "nas_tc/errors.hpp"
#include "nas_tc/file_io.hpp"

namespace nastc {

namespace {

constexpr std::string_view kMagic = "NTCW";

void add_entry(std::vector<WeightEntry>& out, const std::string& name, const Tensor& t) {
  WeightEntry e{name, t.shape(), {}};
  e.values.reserve(t.size());
  for (double v : t.data()) e.values.push_back(static_cast<float>(v));
  out.push_back(std::move(e));
}

}  // namespace

std::string serialize_weights(const std::vector<WeightEntry>& entries) {
  std::string out;
  binary::put_bytes(out, kMagic);
  binary::put_u32(out, kWeightsVersion);
  for (const WeightEntry& e : entries) {
    if (e.values.size() != shape_size(e.shape)) {
      throw UsageError("serialize_weights: " + e.name + " holds " +
                       std::to_string(e.values.size()) + " values for shape " +
                       shape_string(e.shape));
    }
    binary::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    binary::put_bytes(out, e.name);
    binary::put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) binary::put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : e.values) binary::put_f32(out, v);
  }
  return out;
}

std::vector<WeightEntry> parse_weights(std::string_view bytes) {
  binary::Reader r(bytes);
  const std::string_view magic = r.bytes(4, "magic");
  if (magic != kMagic) throw FormatError(0, "bad magic, expected \"NTCW\"");
  const std::uint64_t vpos = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion) {
    throw FormatError(vpos, "unsupported version " + std::to_string(version));
  }
  std::vector<WeightEntry> out;
  std::unordered_set<std::string> seen;
  while (!r.at_end()) {
    const std::uint64_t start = r.offset();
    WeightEntry e;
    const std::uint32_t len = r.u32("name length");
    e.name = std::string(r.bytes(len, "name"));
    if (!seen.insert(e.name).second) {
      throw FormatError(start, "duplicate entry \"" + e.name + "\"");
    }
    const std::uint32_t rank = r.u32("rank");
    r.need(std::uint64_t{rank} * 4, "dims");
    // Saturate instead of overflowing; need() below rejects anything too big.
    constexpr std::uint64_t kCap = std::uint64_t{1} << 62;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32("dims");
      e.shape.push_back(d);
      count = d != 0 && count > kCap / d ? kCap : count * d;
    }
    if (count >= kCap / 4) {
      throw FormatError(r.offset(), "entry \"" + e.name + "\" declares more values than the file holds");
    }
    r.need(count * 4, "values");
    e.values.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) e.values.push_back(r.f32("values"));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<WeightEntry> snapshot_weights(Module& module) {
  std::vector<WeightEntry> out;
  for (Parameter* p : module.parameters()) add_entry(out, p->name(), p->value());
  for (const NamedTensor& b : module.buffers()) add_entry(out, b.name, *b.tensor);
  return out;
}

void restore_weights(Module& module, const std::vector<WeightEntry>& entries) {
  std::unordered_map<std::string, const WeightEntry*> by_name;
  for (const WeightEntry& e : entries) by_name[e.name] = &e;
  auto assign = [&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("weights: missing tensor \"" + name + "\"");
    const WeightEntry& e = *it->second;
    if (e.shape != t.shape()) {
      throw ConfigError("weights: \"" + name + "\" has shape " + shape_string(e.shape) +
                        ", model expects " + shape_string(t.shape()));
    }
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = e.values[i];
    by_name.erase(it);
  };
  for (Parameter* p : module.parameters()) assign(p->name(), p->value());
  for (const NamedTensor& b : module.buffers()) assign(b.name, *b.tensor);
  if (!by_name.empty()) {
    throw ConfigError("weights: unexpected tensor \"" + by_name.begin()->first + "\"");
  }
}

void save_weights(const std::filesystem::path& path, Module& module) {
  write_file_atomic(path, serialize_weights(snapshot_weights(module)));
}

void load_weights(const std::filesystem::path& path, Module& module) {
  restore_weights(module, parse_weights(read_file(path)));
}

}  // namespace nastc
