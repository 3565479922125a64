// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "nas_tc/cell.hpp"
#include "nas_tc/config.hpp"
#include "nas_tc/data_io.hpp"
#include "nas_tc/errors.hpp"
#include "nas_tc/file_io.hpp"
#include "unit/test_util.hpp"

namespace nastc {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nas_tc");
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

json manifest_of(const fs::path& artifact) {
  fs::path m = artifact;
  m += ".manifest.json";
  EXPECT_TRUE(fs::exists(m)) << m;
  return json::parse(read_file(m));
}

// Small enough that a full synth/search/train/eval pipeline takes a second.
const char* kTinyConfig = R"({
  "network": {"layers": 1, "groups": 1, "hidden": 4, "dropout": 0.0},
  "search": {"epochs": 1, "batch_size": 8},
  "train": {"epochs": 2, "batch_size": 8}
})";

std::string tiny_spec() {
  SynthSpec spec;
  spec.classes = 2;
  spec.samples_per_class = 12;
  spec.channels = 6;
  spec.timesteps = 8;
  spec.motifs = default_motif_library(2, 6, 8);
  return synth_spec_json(spec);
}

TEST(Cli, DeriveWritesGenotypeAndManifest) {
  testutil::TempDir dir;
  std::mt19937_64 rng(3);
  const CellArch arch(rng, 1.0);
  write_text(dir / "arch.json", serialize_arch(arch));
  const Result r = run({"derive", "--arch", (dir / "arch.json").string(), "--out",
                        (dir / "g.json").string(), "--dataset", "toy"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const Genotype g = parse_genotype(read_file(dir / "g.json"));
  EXPECT_EQ(g, [&] {
    Genotype d = derive_genotype(arch);
    d.meta.dataset = "toy";
    return d;
  }());
  const json m = manifest_of(dir / "g.json");
  EXPECT_EQ(m["subcommand"], "derive");
  EXPECT_EQ(m["threads"], 1);
  EXPECT_TRUE(m.contains("wall_clock_seconds"));
  EXPECT_EQ(m["inputs"]["arch"], (dir / "arch.json").string());
}

TEST(Cli, UsageErrorsExitOne) {
  const Result unknown = run({"derive", "--arch", "a.json", "--out", "g.json", "--frobnicate"});
  EXPECT_EQ(unknown.code, cli::kExitInvalid);
  EXPECT_NE(unknown.err.find("--frobnicate"), std::string::npos);
  EXPECT_NE(unknown.err.find("--arch"), std::string::npos);  // usage follows the error

  const Result missing = run({"train", "--data", "d.ntcf"});
  EXPECT_EQ(missing.code, cli::kExitInvalid);
  EXPECT_NE(missing.err.find("--genotype"), std::string::npos);

  EXPECT_EQ(run({}).code, cli::kExitInvalid);
  EXPECT_EQ(run({"nonsense"}).code, cli::kExitInvalid);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, MissingInputsNameThePath) {
  testutil::TempDir dir;
  write_text(dir / "g.json", read_file(testutil::fixture("genotype_fixture.json")));
  const std::string weights = (dir / "nope.ntcw").string();
  const Result r = run({"eval", "--genotype", (dir / "g.json").string(), "--weights", weights,
                        "--data", (dir / "d.ntcf").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find(weights), std::string::npos) << r.err;

  const Result bad_arch = run({"derive", "--arch", (dir / "absent.json").string(), "--out",
                               (dir / "o.json").string()});
  EXPECT_EQ(bad_arch.code, cli::kExitInvalid);
  EXPECT_NE(bad_arch.err.find("absent.json"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "o.json"));
}

TEST(Cli, MalformedGenotypeReportsLocation) {
  testutil::TempDir dir;
  json g = json::parse(read_file(testutil::fixture("genotype_fixture.json")));
  g["nodes"][1][1]["op"] = "conv9";
  write_text(dir / "g.json", g.dump());
  const Result r = run({"audit", "--genotype", (dir / "g.json").string(), "--out",
                        (dir / "a.csv").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("/nodes/1/1/op"), std::string::npos) << r.err;
}

TEST(Cli, AuditWritesCsvAndManifest) {
  testutil::TempDir dir;
  const Result r = run({"audit", "--genotype", testutil::fixture("genotype_fixture.json").string(),
                        "--layers", "4", "--out", (dir / "a.csv").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const std::string csv = read_file(dir / "a.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layers,nas_tc_params,timeception_params");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  const json m = manifest_of(dir / "a.csv");
  EXPECT_FALSE(m["assumptions"].empty());
}

TEST(Cli, GradCheckPrintsEveryOp) {
  testutil::TempDir dir;
  const Result r = run({"grad-check", "--trials", "1", "--out", (dir / "gc.json").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const char* name : {"identity", "max_pool_2", "sep_conv_k7", "dil_conv_k5"}) {
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
  }
  const json report = json::parse(read_file(dir / "gc.json"));
  EXPECT_GE(report["results"].size(), 9u);
  for (const json& row : report["results"]) EXPECT_LT(row["max_rel_error"].get<double>(), 1e-4);
}

TEST(Cli, ThreadCapParsing) {
  unsetenv("NAS_TC_THREADS");
  EXPECT_EQ(cli::thread_cap(), 1u);
  setenv("NAS_TC_THREADS", "4", 1);
  EXPECT_EQ(cli::thread_cap(), 4u);
  setenv("NAS_TC_THREADS", "four", 1);
  EXPECT_THROW(cli::thread_cap(), UsageError);
  setenv("NAS_TC_THREADS", "0", 1);
  EXPECT_THROW(cli::thread_cap(), UsageError);
  testutil::TempDir dir;
  setenv("NAS_TC_THREADS", "junk", 1);
  const Result r = run({"audit", "--genotype", testutil::fixture("genotype_fixture.json").string(),
                        "--out", (dir / "a.csv").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("NAS_TC_THREADS"), std::string::npos);
  unsetenv("NAS_TC_THREADS");
}

TEST(Cli, FullPipeline) {
  testutil::TempDir dir;
  const auto p = [&](const char* name) { return (dir / name).string(); };
  write_text(dir / "spec.json", tiny_spec());
  write_text(dir / "cfg.json", kTinyConfig);

  Result r = run({"synth", "--spec", p("spec.json"), "--out", p("train.ntcf"), "--val-out",
                  p("val.ntcf"), "--val-fraction", "0.25", "--seed", "5"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(load_features(dir / "train.ntcf").size(), 18u);
  EXPECT_EQ(load_features(dir / "val.ntcf").size(), 6u);
  EXPECT_EQ(manifest_of(dir / "val.ntcf")["seed"], 5);

  r = run({"search", "--data", p("train.ntcf"), "--config", p("cfg.json"), "--out", p("g.json"),
           "--trace", p("trace.json"), "--arch-out", p("arch.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const Genotype g = parse_genotype(read_file(dir / "g.json"));
  EXPECT_EQ(g.meta.dataset, "train");
  EXPECT_EQ(derive_genotype(parse_arch(read_file(dir / "arch.json"))).nodes, g.nodes);
  EXPECT_EQ(json::parse(read_file(dir / "trace.json"))["epochs"].size(), 1u);

  r = run({"train", "--genotype", p("g.json"), "--data", p("train.ntcf"), "--val", p("val.ntcf"),
           "--config", p("cfg.json"), "--out", p("w.ntcw"), "--history", p("h.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(json::parse(read_file(dir / "h.json")).size(), 2u);
  const json m = manifest_of(dir / "w.ntcw");
  EXPECT_EQ(m["config"]["network"]["channels"], 6);
  EXPECT_EQ(m["config"]["train"]["epochs"], 2);

  r = run({"eval", "--genotype", p("g.json"), "--weights", p("w.ntcw"), "--data", p("val.ntcf"),
           "--config", p("cfg.json"), "--out", p("report.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const json report = json::parse(read_file(dir / "report.json"));
  const double map = report["map"].get<double>();
  EXPECT_GE(map, 0.0);
  EXPECT_LE(map, 1.0);
  EXPECT_TRUE(fs::exists(p("report.json") + ".manifest.json"));

  // Evaluating with a different network shape must fail cleanly.
  write_text(dir / "cfg2.json", R"({"network": {"layers": 1, "groups": 1, "hidden": 5}})");
  r = run({"eval", "--genotype", p("g.json"), "--weights", p("w.ntcw"), "--data", p("val.ntcf"),
           "--config", p("cfg2.json")});
  EXPECT_EQ(r.code, cli::kExitInvalid);
}

}  // namespace
}  // namespace nastc
