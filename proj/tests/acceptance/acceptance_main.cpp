// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion. Criteria listed with
// --known-failing are reported but do not change the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>

#include "nas_tc/cell.hpp"
#include "nas_tc/data_io.hpp"
#include "nas_tc/errors.hpp"
#include "nas_tc/grad_check.hpp"
#include "nas_tc/network.hpp"
#include "nas_tc/param_audit.hpp"
#include "nas_tc/search.hpp"
#include "nas_tc/train_eval.hpp"
#include "nas_tc/weights_io.hpp"
#include "oracles/oracles.hpp"
#include "unit/test_util.hpp"

namespace {

using namespace nastc;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Outcome {
  bool pass;
  std::string detail;
};

// ---- 1: gradient suite ------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  GradCheckOptions opt;
  opt.h = 1e-5;
  opt.trials = 20;
  const std::vector<GradCheckResult> results = run_grad_check_suite(opt);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  bool trials_ok = results.size() >= kNumOps + 1;
  for (const GradCheckResult& r : results) {
    trials_ok = trials_ok && r.trials == 20 && r.checked > 0;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu checks, worst %.2e (%s), %.1fs", results.size(), worst,
                worst_name.c_str(), secs);
  return {trials_ok && worst < 1e-4 && secs < 120.0, buf};
}

// ---- 2: shapes ----------------------------------------------------------------

Outcome shape_invariants() {
  std::mt19937_64 rng(2);
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  std::size_t bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = pick(1, 4), m = pick(1, 4), s = kCellNodes;
    const std::size_t c = n * m * pick(1, 3) + n * pick(0, m - 1);
    const std::size_t t = pick(2, 17);
    const std::size_t h = pick(1, 2), w = pick(1, 2);
    const Genotype g = testutil::random_genotype(rng);
    LayerConfig lc;
    lc.groups = n;
    lc.scale_s = s;
    lc.scale_m = m;
    lc.genotype = &g;
    const std::size_t width = cell_width(c, n, m);
    if (width == 0) continue;
    NasTcLayer layer("l", lc, LayerShape{c, c, width, n * s * width, t, t / 2}, rng);
    const Tensor x = oracle::random_tensor({2, c, t, h, w}, rng);
    const Shape y = layer.forward(Variable::constant(x), Variable::constant(x), {}).shape();
    if (y != Shape{2, n * s * ((c / n) / m), t / 2, h, w}) ++bad;
  }

  NetworkConfig cfg;
  cfg.channels = 24;
  cfg.groups = 2;
  cfg.timesteps = 128;
  cfg.height = 1;
  cfg.width = 1;
  cfg.layers = 4;
  cfg.hidden = 4;
  cfg.classes = 2;
  NasTcNetwork net(cfg, testutil::fixture_genotype(), 1);
  Variable x = Variable::constant(oracle::random_tensor({1, 24, 128, 1, 1}, rng));
  Variable skip = x;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    Variable y = net.layer(i).forward(x, skip, {});
    skip = x;
    x = y;
  }
  const std::size_t t_out = x.shape()[2];
  const std::size_t t_formula = layer_shapes(cfg).back().out_timesteps;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/200 shape mismatches; L=4 over T=128 gives T=%zu", bad, t_out);
  return {bad == 0 && t_out == 8 && t_formula == 8, buf};
}

// ---- 3: discretization ----------------------------------------------------------

Outcome discretization_oracle() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> fine(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(-1, 1);
  std::size_t mismatches = 0, tie_trials = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<AlphaRow> rows(kCellEdges);
    const bool ties = trial % 4 == 0;
    tie_trials += ties;
    for (AlphaRow& r : rows)
      for (double& v : r) v = ties ? coarse(rng) : fine(rng);
    const Genotype g = derive_genotype(CellArch(rows));
    if (g.nodes != oracle::derive(rows)) ++mismatches;
  }
  // Uniform alphas: every pair ties, so the rule picks I_{k-2} and I_{k-1}
  // with the lowest-index non-zero op.
  const Genotype u = derive_genotype(CellArch());
  bool uniform_ok = true;
  for (const auto& node : u.nodes) {
    uniform_ok = uniform_ok && node[0] == GenotypeEdge{0, OpKind::kIdentity} &&
                 node[1] == GenotypeEdge{1, OpKind::kIdentity};
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/1000 mismatches (%zu tie-heavy trials), uniform rule %s",
                mismatches, tie_trials, uniform_ok ? "ok" : "violated");
  return {mismatches == 0 && uniform_ok, buf};
}

// ---- 4: relaxed vs discrete -------------------------------------------------------

Outcome relaxed_discrete() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Genotype g = trial == 0 ? testutil::fixture_genotype() : testutil::random_genotype(rng);
    std::vector<AlphaRow> rows(kCellEdges);
    for (AlphaRow& r : rows) {
      r.fill(0.0);
      r[op_index(OpKind::kZero)] = 40.0;
    }
    for (int j = 0; j < kCellNodes; ++j) {
      for (const GenotypeEdge& e : g.nodes[static_cast<std::size_t>(j)]) {
        AlphaRow& r = rows[edge_index(j, e.pred)];
        r.fill(0.0);
        r[op_index(e.op)] = 40.0;
      }
    }
    CellArch arch(rows);
    Cell relaxed("r", 7, 6, 3, false, rng);
    Cell discrete("d", 7, 6, 3, g, true, rng);
    discrete.copy_chosen_weights_from(relaxed);
    const Variable a = Variable::constant(oracle::random_tensor({3, 7, 10, 1, 2}, rng));
    const Variable b = Variable::constant(oracle::random_tensor({3, 6, 10, 1, 2}, rng));
    const Tensor yr = relaxed.forward(a, b, {}, arch.softmax_weights()).value();
    const Tensor yd = discrete.forward(a, b, {}).value();
    if (yr.shape() != yd.shape()) return {false, "shape mismatch"};
    double diff = 0.0;
    for (std::size_t i = 0; i < yr.size(); ++i) diff = std::max(diff, std::abs(yr[i] - yd[i]));
    worst = std::max(worst, diff / yd.max_abs());
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "worst relative difference %.2e over 20 genotypes", worst);
  return {worst < 1e-5, buf};
}

// ---- 5: parameter audit -------------------------------------------------------------

struct SubCheck {
  std::string name;
  bool pass;
  std::string detail;
};

bool within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * target;
}

std::string millions(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3fM", static_cast<double>(n) / 1e6);
  return buf;
}

std::vector<SubCheck> parameter_audit() {
  const Genotype g = testutil::fixture_genotype();
  const AuditReport r = audit(8, NetworkConfig{}, g);
  std::vector<SubCheck> out;
  const auto& rows = r.rows;

  out.push_back({"classifier-only 0.61M +-10%", within(rows[0].nas_tc_total, 0.61e6, 0.10),
                 millions(rows[0].nas_tc_total)});
  // Per-model targets count TC-layer parameters only.
  out.push_back({"NAS-TC L=3 1.5M +-15%", within(rows[3].nas_tc_layers, 1.5e6, 0.15),
                 millions(rows[3].nas_tc_layers)});
  out.push_back({"NAS-TC L=4 2.0M +-15%", within(rows[4].nas_tc_layers, 2.0e6, 0.15),
                 millions(rows[4].nas_tc_layers)});
  out.push_back({"Timeception L=3 2.0M +-15%", within(rows[3].timeception_layers, 2.0e6, 0.15),
                 millions(rows[3].timeception_layers)});
  out.push_back({"Timeception L=4 2.8M +-15%", within(rows[4].timeception_layers, 2.8e6, 0.15),
                 millions(rows[4].timeception_layers)});

  const double share = r.first_timeception_layer.pointwise_share();
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * share);
  out.push_back({"pointwise share 57% +-5pp", std::abs(share - 0.57) <= 0.05, buf});

  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * rows[6].reduction);
  out.push_back({"TC-layer reduction at L=6 36% +-8pp", std::abs(rows[6].reduction - 0.36) <= 0.08,
                 buf});

  std::string first_violation = "none";
  for (std::size_t l = 1; l <= 8; ++l) {
    if (rows[l].nas_tc_total >= rows[l].timeception_total) {
      first_violation = "L=" + std::to_string(l) + " (" + millions(rows[l].nas_tc_total) +
                        " vs " + millions(rows[l].timeception_total) + ")";
      break;
    }
  }
  std::size_t first_layer_violation = 0;
  for (std::size_t l = 8; l >= 1; --l) {
    if (rows[l].nas_tc_layers >= rows[l].timeception_layers) first_layer_violation = l;
  }
  // Totals include each model's classifier, as in the L = 0 classifier-only point.
  out.push_back({"NAS-TC < Timeception for L=1..8", first_violation == "none",
                 "first violation in totals " + first_violation + "; TC layers alone " +
                     (first_layer_violation == 0 ? std::string("none")
                                                 : "L=" + std::to_string(first_layer_violation))});

  // Analytic counts against instantiated models and the tensor-by-tensor oracle.
  bool exact = true;
  std::string mismatch = "all equal";
  const NetworkConfig d;
  // Hidden layer and output layer, weights plus biases.
  if (d.channels * d.hidden + d.hidden + d.hidden * d.classes + d.classes != rows[0].nas_tc_total) {
    exact = false;
    mismatch = "classifier";
  }
  for (std::size_t l = 1; l <= 4 && exact; ++l) {
    NetworkConfig cfg;
    cfg.layers = l;
    NasTcNetwork net(cfg, g, 1);
    if (net.parameter_count() != rows[l].nas_tc_total) {
      exact = false;
      mismatch = "NAS-TC L=" + std::to_string(l);
    }
  }
  std::size_t c = NetworkConfig{}.channels, sum = 0;
  for (std::size_t l = 1; l <= 8 && exact; ++l) {
    sum += oracle::timeception_layer(c);
    c = 8 * 5 * ((c * 5 / 4) / (5 * 8));  // concatenated branch outputs
    if (sum != rows[l].timeception_layers) {
      exact = false;
      mismatch = "Timeception L=" + std::to_string(l);
    }
  }
  out.push_back({"analytic == enumerated counts", exact, mismatch});
  return out;
}

// ---- 6/7: end-to-end search ------------------------------------------------------------

struct SeedRun {
  std::string genotype_json;
  double searched_map = 0.0;
  std::vector<double> random_maps;
};

// Uniform over distinct predecessor pairs and the eight non-zero ops.
Genotype sample_random_genotype(std::mt19937_64& rng) {
  Genotype g;
  for (int j = 0; j < kCellNodes; ++j) {
    std::vector<int> preds(static_cast<std::size_t>(j + kCellInputs));
    for (std::size_t p = 0; p < preds.size(); ++p) preds[p] = static_cast<int>(p);
    std::shuffle(preds.begin(), preds.end(), rng);
    for (std::size_t e = 0; e < 2; ++e) {
      std::size_t op;
      do {
        op = rng() % kNumOps;
      } while (op_table()[op].kind == OpKind::kZero);
      g.nodes[static_cast<std::size_t>(j)][e] = GenotypeEdge{preds[e], op_table()[op].kind};
    }
  }
  return g;
}

SeedRun run_seed(std::uint64_t seed, std::size_t random_count) {
  SynthSpec spec;
  spec.classes = 4;
  spec.samples_per_class = 125;
  spec.channels = 16;
  spec.timesteps = 32;
  spec.seed = seed;
  spec.motifs = default_motif_library(spec.classes, spec.channels, spec.timesteps);
  const Dataset all = generate_synthetic(spec);
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < all.size(); ++i) (i % 5 == 4 ? val_idx : train_idx).push_back(i);
  const Dataset train_set = subset(all, train_idx);
  const Dataset val_set = subset(all, val_idx);

  NetworkConfig net;
  net.channels = spec.channels;
  net.timesteps = spec.timesteps;
  net.height = 1;
  net.width = 1;
  net.classes = spec.classes;
  net.layers = 1;
  net.groups = 1;
  net.hidden = 32;

  SearchConfig sc;
  sc.epochs = 10;
  sc.seed = seed;
  const SearchResult found = search(train_set, net, sc);

  TrainConfig tc;
  tc.epochs = 100;
  tc.seed = seed;
  auto retrain = [&](const Genotype& g) {
    TrainOutcome o = train(g, train_set, nullptr, net, tc);
    return evaluate(*o.net, val_set).map;
  };

  SeedRun r;
  r.genotype_json = serialize_genotype(found.genotype);
  r.searched_map = retrain(found.genotype);
  std::mt19937_64 rng(seed * 7 + 3);
  for (std::size_t i = 0; i < random_count; ++i) r.random_maps.push_back(retrain(sample_random_genotype(rng)));
  return r;
}

// ---- 8: metrics ----------------------------------------------------------------------------

Outcome metric_oracle() {
  const std::vector<double> s{0.9, 0.8, 0.7}, y{1, 0, 1};
  const double ap = mean_average_precision(s, y, 1).map;
  bool ok = std::abs(ap - 5.0 / 6.0) <= 1e-12;
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 12, k = 1 + rng() % 5;
    std::vector<double> scores(n * k), labels(n * k);
    for (double& v : scores) v = static_cast<double>(rng() % 7) / 7.0;  // frequent ties
    for (double& v : labels) v = static_cast<double>(rng() % 2);
    if (std::find(labels.begin(), labels.end(), 1.0) == labels.end()) {
      // mAP is undefined without a single positive.
      try {
        mean_average_precision(scores, labels, k);
        ok = false;
      } catch (const ConfigError&) {
      }
      continue;
    }
    const ApResult got = mean_average_precision(scores, labels, k);
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> sc(n), lc(n);
      for (std::size_t i = 0; i < n; ++i) {
        sc[i] = scores[i * k + c];
        lc[i] = labels[i * k + c];
      }
      const double want = oracle::average_precision(sc, lc);
      if (std::isnan(want)) {
        ok = ok && !got.per_class[c].has_value();
        continue;
      }
      ok = ok && got.per_class[c].has_value();
      if (got.per_class[c]) worst = std::max(worst, std::abs(*got.per_class[c] - want));
      total += want;
      ++counted;
    }
    worst = std::max(worst, std::abs(got.map - total / static_cast<double>(counted)));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "5/6 case %.15f, worst deviation %.1e over 50 matrices", ap, worst);
  return {ok && worst <= 1e-12, buf};
}

// ---- 9: formats ----------------------------------------------------------------------------

constexpr std::size_t kAnyOffset = static_cast<std::size_t>(-1);

template <typename E, typename Fn>
bool throws_at(Fn&& fn, std::size_t offset) {
  try {
    fn();
  } catch (const E& e) {
    if constexpr (std::is_same_v<E, FormatError>) return offset == kAnyOffset || e.offset() == offset;
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome format_round_trips() {
  std::mt19937_64 rng(9);
  std::size_t failures = 0;
  std::normal_distribution<float> dist(0.0f, 2.0f);

  for (int trial = 0; trial < 100; ++trial) {
    Genotype g = testutil::random_genotype(rng);
    if (trial % 2 == 0) g.meta.seed = rng();
    if (trial % 3 == 0) g.meta.epoch = static_cast<int>(rng() % 100);
    g.meta.dataset = "set" + std::to_string(trial);
    const std::string text = serialize_genotype(g);
    const Genotype back = parse_genotype(text);
    if (!(back == g) || serialize_genotype(back) != text) ++failures;

    Dataset d;
    d.channels = 1 + rng() % 4;
    d.timesteps = 1 + rng() % 5;
    d.height = 1 + rng() % 2;
    d.width = 1 + rng() % 2;
    d.classes = 1 + rng() % 4;
    d.label_mode = rng() % 2 ? LabelMode::kSingleLabel : LabelMode::kMultiLabel;
    for (std::size_t i = 0, n = rng() % 5; i < n; ++i) {
      FeatureRecord rec;
      rec.id = "r" + std::to_string(rng() % 1000);
      rec.features.resize(d.feature_size());
      for (float& v : rec.features) v = dist(rng);
      rec.labels.assign(d.classes, 0);
      rec.labels[rng() % d.classes] = 1;
      d.records.push_back(std::move(rec));
    }
    const std::string bytes = serialize_features(d);
    const Dataset dback = parse_features(bytes);
    if (!(dback == d) || serialize_features(dback) != bytes) ++failures;

    std::vector<WeightEntry> entries;
    for (std::size_t i = 0, n = rng() % 5; i < n; ++i) {
      WeightEntry e;
      e.name = "w" + std::to_string(i);
      for (std::size_t r = 0, rank = rng() % 4; r < rank; ++r) e.shape.push_back(1 + rng() % 3);
      e.values.resize(shape_size(e.shape));
      for (float& v : e.values) v = dist(rng);
      entries.push_back(std::move(e));
    }
    const std::string wbytes = serialize_weights(entries);
    const auto wback = parse_weights(wbytes);
    if (!(wback == entries) || serialize_weights(wback) != wbytes) ++failures;
  }

  // Files on disk survive byte-for-byte too.
  testutil::TempDir dir;
  NetworkConfig small;
  small.channels = 6;
  small.timesteps = 4;
  small.height = 1;
  small.width = 1;
  small.layers = 1;
  small.groups = 1;
  small.hidden = 3;
  small.classes = 2;
  NasTcNetwork net(small, testutil::fixture_genotype(), 3);
  save_weights(dir / "w.ntcw", net);
  NasTcNetwork other(small, testutil::fixture_genotype(), 4);
  load_weights(dir / "w.ntcw", other);
  if (snapshot_weights(other) != snapshot_weights(net)) ++failures;

  // Corruption.
  std::size_t corrupt_failures = 0;
  Dataset d;
  d.channels = 2;
  d.timesteps = 2;
  d.classes = 2;
  d.records.push_back(FeatureRecord{"a", {1, 2, 3, 4}, {1, 0}});
  const std::string good = serialize_features(d);
  std::string bad = good;
  bad[0] = 'X';
  corrupt_failures += !throws_at<FormatError>([&] { parse_features(bad); }, 0);
  bad = good;
  bad[4] = 9;
  corrupt_failures += !throws_at<FormatError>([&] { parse_features(bad); }, 4);
  bad = good;
  bad[32] = 7;
  corrupt_failures += !throws_at<FormatError>([&] { parse_features(bad); }, 32);
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    corrupt_failures +=
        !throws_at<FormatError>([&] { parse_features(good.substr(0, cut)); }, kAnyOffset);
  }
  const std::string w = serialize_weights({WeightEntry{"x", {2}, {1.0f, 2.0f}}});
  bad = w;
  bad[1] = '?';
  corrupt_failures += !throws_at<FormatError>([&] { parse_weights(bad); }, 0);
  for (std::size_t cut = 9; cut < w.size(); ++cut) {
    try {
      parse_weights(w.substr(0, cut));
      ++corrupt_failures;
    } catch (const FormatError&) {
    }
  }
  std::string gj = serialize_genotype(testutil::fixture_genotype());
  gj.replace(gj.find("sep_conv_k3"), 11, "sep_conv_k9");
  corrupt_failures += !throws_at<ParseError>([&] { parse_genotype(gj); }, 0);
  corrupt_failures += !throws_at<IoError>([&] { load_features(dir / "absent.ntcf"); }, 0);

  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu round-trip failures over 300 instances, %zu corruption misses",
                failures, corrupt_failures);
  return {failures == 0 && corrupt_failures == 0, buf};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nas_tc acceptance criteria"};
  std::vector<int> known_failing;
  std::vector<int> only;
  std::size_t seeds = 5;
  app.add_option("--known-failing", known_failing, "Criteria reported but not fatal");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--seeds", seeds, "Seeds for criterion 6")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  const std::set<int> known(known_failing.begin(), known_failing.end());
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

  int fatal = 0;
  auto report = [&](int id, const std::string& name, bool pass, const std::string& detail) {
    const bool excused = !pass && known.count(id) > 0;
    std::printf("criterion %d %-40s %s%s  %s\n", id, name.c_str(), pass ? "PASS" : "FAIL",
                excused ? " (known)" : "", detail.c_str());
    std::fflush(stdout);
    if (!pass && !excused) ++fatal;
  };
  auto timed = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    try {
      const Outcome o = fn();
      report(id, name, o.pass, o.detail);
    } catch (const std::exception& e) {
      report(id, name, false, std::string("threw: ") + e.what());
    }
  };

  timed(1, "gradient suite", gradient_suite);
  timed(2, "shape and stack invariants", shape_invariants);
  timed(3, "discretization oracle", discretization_oracle);
  timed(4, "relaxed/discrete consistency", relaxed_discrete);

  if (wanted(5)) {
    const std::vector<SubCheck> subs = parameter_audit();
    bool all = true;
    for (const SubCheck& s : subs) {
      std::printf("  5.%-42s %s  %s\n", s.name.c_str(), s.pass ? "PASS" : "FAIL", s.detail.c_str());
      all = all && s.pass;
    }
    std::size_t passed = 0;
    for (const SubCheck& s : subs) passed += s.pass;
    report(5, "parameter audit", all, std::to_string(passed) + "/" + std::to_string(subs.size()) +
                                          " sub-checks");
  }

  if (wanted(6) || wanted(7)) {
    const auto t0 = Clock::now();
    std::vector<SeedRun> runs;
    std::vector<double> searched, gaps;
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
      runs.push_back(run_seed(seed, 5));
      const SeedRun& r = runs.back();
      const double rand_median = median(r.random_maps);
      searched.push_back(r.searched_map);
      gaps.push_back(r.searched_map - rand_median);
      std::printf("  seed %llu: searched mAP %.4f, random median %.4f, gap %+.4f\n",
                  static_cast<unsigned long long>(seed), r.searched_map, rand_median, gaps.back());
      std::fflush(stdout);
    }
    const double secs = seconds_since(t0);
    if (wanted(6)) {
      const double m = median(searched), gap = median(gaps);
      char buf[200];
      std::snprintf(buf, sizeof buf, "median mAP %.4f, median gap %+.1f points, %.0fs", m,
                    100.0 * gap, secs);
      report(6, "end-to-end search efficacy", m >= 0.90 && gap >= 0.05 && secs < 1800.0, buf);
    }
    if (wanted(7)) {
      const SeedRun again = run_seed(1, 0);
      const bool same_g = again.genotype_json == runs.front().genotype_json;
      const bool same_m = again.searched_map == runs.front().searched_map;
      char buf[160];
      std::snprintf(buf, sizeof buf, "seed 1 rerun: genotype %s, mAP %.17g vs %.17g",
                    same_g ? "identical" : "differs", again.searched_map,
                    runs.front().searched_map);
      report(7, "determinism", same_g && same_m, buf);
    }
  }

  timed(8, "metric correctness", metric_oracle);
  timed(9, "format round-trips", format_round_trips);
  return fatal == 0 ? 0 : 1;
}
