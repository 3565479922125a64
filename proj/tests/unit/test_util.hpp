// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>

#include "nas_tc/cell.hpp"
#include "nas_tc/file_io.hpp"

namespace testutil {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(NAS_TC_FIXTURE_DIR) / name;
}

inline nastc::Genotype fixture_genotype() {
  return nastc::parse_genotype(nastc::read_file(fixture("genotype_fixture.json")));
}

// Distinct predecessors per node, any op except Zero.
inline nastc::Genotype random_genotype(std::mt19937_64& rng) {
  nastc::Genotype g;
  std::uniform_int_distribution<int> op(0, static_cast<int>(nastc::kNumOps) - 2);
  for (int j = 0; j < nastc::kCellNodes; ++j) {
    std::vector<int> preds(static_cast<std::size_t>(j + nastc::kCellInputs));
    std::iota(preds.begin(), preds.end(), 0);
    std::shuffle(preds.begin(), preds.end(), rng);
    for (std::size_t s = 0; s < 2; ++s) {
      int o = op(rng);
      if (o >= static_cast<int>(nastc::OpKind::kZero)) ++o;
      g.nodes[static_cast<std::size_t>(j)][s] = {preds[s], static_cast<nastc::OpKind>(o)};
    }
  }
  return g;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("nas_tc_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
