// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>

#include "nas_tc/cell.hpp"
#include "nas_tc/config.hpp"
#include "nas_tc/errors.hpp"
#include "nas_tc/file_io.hpp"
#include "nas_tc/grad_check.hpp"
#include "nas_tc/param_audit.hpp"
#include "nas_tc/search.hpp"
#include "nas_tc/train_eval.hpp"
#include "nas_tc/weights_io.hpp"

#ifndef NAS_TC_VERSION
#define NAS_TC_VERSION "0.0.0"
#endif

namespace nastc::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::size_t thread_cap() {
  const char* v = std::getenv("NAS_TC_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0 || v[0] == '-') {
    throw UsageError(std::string("NAS_TC_THREADS must be a positive integer, got \"") + v + "\"");
  }
  return static_cast<std::size_t>(n);
}

namespace {

// Input loaders prefix container/document errors with the offending path.
template <typename Fn>
auto from_file(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const FormatError& e) {
    const std::string what = e.what();  // "at byte N: detail"
    throw FormatError(e.offset(), path.string() + ": " + what.substr(what.find(": ") + 2));
  } catch (const ParseError& e) {
    const std::string what = e.what();  // "location: detail" or "detail"
    const std::string detail = e.location().empty() ? what : what.substr(e.location().size() + 2);
    throw ParseError(path.string() + ":" + e.location(), detail);
  }
}

Dataset read_dataset(const fs::path& p) {
  return from_file(p, [&] { return load_features(p); });
}

Genotype read_genotype(const fs::path& p) {
  return from_file(p, [&] { return parse_genotype(read_file(p)); });
}

RunConfig read_config(const std::optional<std::string>& p) {
  if (!p) return default_config();
  return from_file(*p, [&] { return load_config(*p); });
}

class Run {
 public:
  Run(std::string subcommand, const std::vector<std::string>& args)
      : subcommand_(std::move(subcommand)),
        args_(args),
        threads_(thread_cap()),
        start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& role, const fs::path& p) { inputs_[role] = p.string(); }
  void output(const std::string& role, const fs::path& p) {
    outputs_[role] = p.string();
    artifacts_.push_back(p);
  }
  void set_config(ojson c) { config_ = std::move(c); }
  void set_seed(std::uint64_t s) { seed_ = s; }
  void note(const std::string& key, ojson v) { extra_[key] = std::move(v); }

  // One manifest next to every artifact, each written atomically.
  void finish() const {
    ojson m;
    m["tool"] = "nas_tc";
    m["version"] = NAS_TC_VERSION;
    m["subcommand"] = subcommand_;
    m["argv"] = args_;
    m["seed"] = seed_ ? ojson(*seed_) : ojson(nullptr);
    m["threads"] = threads_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["config"] = config_;
    for (auto it = extra_.begin(); it != extra_.end(); ++it) m[it.key()] = it.value();
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const std::string text = m.dump(2) + "\n";
    for (const fs::path& a : artifacts_) {
      fs::path mp = a;
      mp += ".manifest.json";
      write_file_atomic(mp, text);
    }
  }

 private:
  std::string subcommand_;
  std::vector<std::string> args_;
  std::size_t threads_;
  std::chrono::steady_clock::time_point start_;
  std::optional<std::uint64_t> seed_;
  ojson inputs_ = ojson::object();
  ojson outputs_ = ojson::object();
  ojson config_ = ojson::object();
  ojson extra_ = ojson::object();
  std::vector<fs::path> artifacts_;
};

ojson parsed(const std::string& text) { return ojson::parse(text); }

std::string dataset_tag(const fs::path& p) { return p.stem().string(); }

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::optional<std::string> spec;
  std::string out;
  std::optional<std::string> val_out;
  double val_fraction = 0.2;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Run run("synth", args);
  SynthSpec spec;
  if (a.spec) {
    run.input("spec", *a.spec);
    spec = from_file(*a.spec, [&] { return parse_synth_spec(read_file(*a.spec)); });
  } else {
    spec = default_config().synth;
  }
  if (a.seed) spec.seed = *a.seed;
  validate_synth_spec(spec);
  run.set_seed(spec.seed);

  const Dataset all = generate_synthetic(spec);
  ojson cfg = parsed(synth_spec_json(spec));
  if (a.val_out) {
    cfg["val_fraction"] = a.val_fraction;
    auto [val, train] = split_dataset(all, a.val_fraction, spec.seed);
    write_features(a.out, train);
    write_features(*a.val_out, val);
    run.output("train", a.out);
    run.output("val", *a.val_out);
    out << "wrote " << train.size() << " records to " << a.out << " and " << val.size()
        << " to " << *a.val_out << "\n";
  } else {
    write_features(a.out, all);
    run.output("data", a.out);
    out << "wrote " << all.size() << " records to " << a.out << "\n";
  }
  run.set_config(std::move(cfg));
  run.finish();
  return kExitOk;
}

// ---- search ---------------------------------------------------------------

struct SearchArgs {
  std::string data;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::string out;
  std::optional<std::string> trace;
  std::optional<std::string> arch_out;
};

int run_search(const SearchArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Run run("search", args);
  RunConfig cfg = read_config(a.config);
  if (a.config) run.input("config", *a.config);
  if (a.seed) cfg.search.seed = *a.seed;
  if (a.epochs) cfg.search.epochs = *a.epochs;
  validate_search_config(cfg.search);
  run.input("data", a.data);
  const Dataset data = read_dataset(a.data);
  cfg.network = resolve_network(cfg, data);
  run.set_seed(cfg.search.seed);

  SearchResult r = search(data, cfg.network, cfg.search);
  r.genotype.meta.seed = cfg.search.seed;
  r.genotype.meta.epoch = static_cast<int>(cfg.search.epochs);
  r.genotype.meta.dataset = dataset_tag(a.data);

  write_file_atomic(a.out, serialize_genotype(r.genotype));
  run.output("genotype", a.out);
  if (a.trace) {
    write_file_atomic(*a.trace, trace_json(r.trace));
    run.output("trace", *a.trace);
  }
  if (a.arch_out) {
    write_file_atomic(*a.arch_out, serialize_arch(CellArch(r.alphas)));
    run.output("arch", *a.arch_out);
  }
  for (const SearchEpoch& e : r.trace) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %3zu  train_loss %.5f  val_loss %.5f  %.1fs\n", e.epoch,
                  e.train_loss, e.val_loss, e.seconds);
    out << buf;
  }
  out << "genotype written to " << a.out << "\n";
  run.set_config(parsed(config_json(cfg)));
  run.finish();
  return kExitOk;
}

// ---- derive ---------------------------------------------------------------

struct DeriveArgs {
  std::string arch;
  std::string out;
  std::optional<std::string> dataset;
};

int run_derive(const DeriveArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Run run("derive", args);
  run.input("arch", a.arch);
  const CellArch arch = from_file(a.arch, [&] { return parse_arch(read_file(a.arch)); });
  Genotype g = derive_genotype(arch);
  if (a.dataset) g.meta.dataset = *a.dataset;
  write_file_atomic(a.out, serialize_genotype(g));
  run.output("genotype", a.out);
  out << "genotype written to " << a.out << "\n";
  run.finish();
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string genotype;
  std::string data;
  std::optional<std::string> val;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::string out;
  std::optional<std::string> history;
};

std::string history_json(const std::vector<EpochRecord>& h) {
  ojson arr = ojson::array();
  for (const EpochRecord& e : h) {
    ojson j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["val_metric"] = e.val_metric ? ojson(*e.val_metric) : ojson(nullptr);
    j["seconds"] = e.seconds;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

int run_train(const TrainArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Run run("train", args);
  RunConfig cfg = read_config(a.config);
  if (a.config) run.input("config", *a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  validate_train_config(cfg.train);
  run.input("genotype", a.genotype);
  run.input("data", a.data);
  const Genotype g = read_genotype(a.genotype);
  const Dataset train_set = read_dataset(a.data);
  std::optional<Dataset> val_set;
  if (a.val) {
    run.input("val", *a.val);
    val_set = read_dataset(*a.val);
  }
  cfg.network = resolve_network(cfg, train_set);
  if (val_set) (void)resolve_network(cfg, *val_set);
  run.set_seed(cfg.train.seed);

  fs::path ckpt = a.out;
  ckpt += ".ckpt";
  CheckpointFn checkpoint;
  if (cfg.train.checkpoint_every > 0) {
    checkpoint = [&](std::size_t, NasTcNetwork& net) { save_weights(ckpt, net); };
  }
  TrainOutcome o = train(g, train_set, val_set ? &*val_set : nullptr, cfg.network, cfg.train,
                         checkpoint);
  save_weights(a.out, *o.net);
  run.output("weights", a.out);
  if (cfg.train.checkpoint_every > 0) run.output("checkpoint", ckpt);
  if (a.history) {
    write_file_atomic(*a.history, history_json(o.history));
    run.output("history", *a.history);
  }
  for (const EpochRecord& e : o.history) {
    char buf[128];
    if (e.val_metric) {
      std::snprintf(buf, sizeof buf, "epoch %4zu  train_loss %.5f  val %.4f\n", e.epoch,
                    e.train_loss, *e.val_metric);
    } else {
      std::snprintf(buf, sizeof buf, "epoch %4zu  train_loss %.5f\n", e.epoch, e.train_loss);
    }
    out << buf;
  }
  out << "weights written to " << a.out << "\n";
  run.set_config(parsed(config_json(cfg)));
  run.finish();
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string genotype;
  std::string weights;
  std::string data;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::size_t batch = 32;
};

int run_eval(const EvalArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Run run("eval", args);
  if (!fs::exists(a.weights)) throw IoError("weights file not found: " + a.weights);
  RunConfig cfg = read_config(a.config);
  if (a.config) run.input("config", *a.config);
  run.input("genotype", a.genotype);
  run.input("weights", a.weights);
  run.input("data", a.data);
  const Genotype g = read_genotype(a.genotype);
  const Dataset data = read_dataset(a.data);
  cfg.network = resolve_network(cfg, data);

  NasTcNetwork net(cfg.network, g, cfg.train.seed);
  from_file(a.weights, [&] {
    load_weights(a.weights, net);
    return 0;
  });
  const EvalReport report = evaluate(net, data, a.batch);
  const fs::path report_path = a.out ? fs::path(*a.out) : fs::path(a.weights + ".eval.json");
  write_file_atomic(report_path, report_json(report));
  run.output("report", report_path);
  out << report_table(report);
  run.set_config(parsed(config_json(cfg)));
  run.finish();
  return kExitOk;
}

// ---- audit ----------------------------------------------------------------

struct AuditArgs {
  std::size_t layers = 8;
  std::string genotype;
  std::optional<std::string> config;
  std::string out = "audit.csv";
};

int run_audit(const AuditArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  Run run("audit", args);
  RunConfig cfg = read_config(a.config);
  if (a.config) run.input("config", *a.config);
  run.input("genotype", a.genotype);
  const Genotype g = read_genotype(a.genotype);
  const AuditReport r = audit(a.layers, cfg.network, g, TimeceptionAssumptions{});
  write_file_atomic(a.out, audit_csv(r));
  run.output("csv", a.out);
  out << audit_text(r);
  run.note("assumptions", r.assumptions);
  run.set_config(parsed(config_json(cfg))["network"]);
  run.finish();
  return kExitOk;
}

// ---- grad-check -----------------------------------------------------------

struct GradArgs {
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  std::string out = "grad_check.json";
};

int run_grad_check(const GradArgs& a, const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  Run run("grad-check", args);
  run.set_seed(a.seed);
  GradCheckOptions opt;
  opt.trials = a.trials;
  opt.seed = a.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<GradCheckResult> results = run_grad_check_suite(opt);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ojson rows = ojson::array();
  bool ok = true;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %14s %8s %8s %8s\n", "op", "max_rel_error", "trials",
                "checked", "skipped");
  out << buf;
  for (const GradCheckResult& r : results) {
    const bool pass = r.max_rel_error < a.tolerance;
    ok = ok && pass;
    std::snprintf(buf, sizeof buf, "%-22s %14.3e %8zu %8zu %8zu%s\n", r.name.c_str(),
                  r.max_rel_error, r.trials, r.checked, r.skipped, pass ? "" : "  FAIL");
    out << buf;
    ojson j;
    j["op"] = r.name;
    j["max_rel_error"] = r.max_rel_error;
    j["trials"] = r.trials;
    j["checked"] = r.checked;
    j["skipped"] = r.skipped;
    rows.push_back(std::move(j));
  }
  std::snprintf(buf, sizeof buf, "%.1fs\n", seconds);
  out << buf;

  ojson doc;
  doc["h"] = opt.h;
  doc["tolerance"] = a.tolerance;
  doc["results"] = std::move(rows);
  write_file_atomic(a.out, doc.dump(2) + "\n");
  run.output("report", a.out);
  ojson c;
  c["trials"] = a.trials;
  c["h"] = opt.h;
  c["kink_tol"] = opt.kink_tol;
  c["tolerance"] = a.tolerance;
  run.set_config(std::move(c));
  run.finish();
  if (!ok) {
    err << "error: gradient check exceeded tolerance " << a.tolerance << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"NAS-TC: differentiable temporal-convolution search and training", "nas_tc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NAS_TC_VERSION);

  SynthArgs synth_a;
  auto* synth = app.add_subcommand("synth", "Generate a planted-motif synthetic dataset");
  synth->add_option("--spec", synth_a.spec, "Synth spec JSON (defaults when omitted)");
  synth->add_option("--out", synth_a.out, "Output NTCF file (train split with --val-out)")
      ->required();
  synth->add_option("--val-out", synth_a.val_out, "Also write a held-out NTCF split here");
  synth->add_option("--val-fraction", synth_a.val_fraction, "Held-out fraction")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  synth->add_option("--seed", synth_a.seed, "Override the spec seed");

  SearchArgs search_a;
  auto* srch = app.add_subcommand("search", "Run the architecture search");
  srch->add_option("--data", search_a.data, "NTCF dataset")->required();
  srch->add_option("--config", search_a.config, "Run config JSON");
  srch->add_option("--seed", search_a.seed, "Search seed");
  srch->add_option("--epochs", search_a.epochs, "Search epochs")->check(CLI::PositiveNumber);
  srch->add_option("--out", search_a.out, "Genotype JSON output")->required();
  srch->add_option("--trace", search_a.trace, "Per-epoch trace JSON output");
  srch->add_option("--arch-out", search_a.arch_out, "Final alpha JSON output");

  DeriveArgs derive_a;
  auto* drv = app.add_subcommand("derive", "Discretize an alpha file into a genotype");
  drv->add_option("--arch", derive_a.arch, "Alpha JSON")->required();
  drv->add_option("--out", derive_a.out, "Genotype JSON output")->required();
  drv->add_option("--dataset", derive_a.dataset, "Dataset tag for the genotype metadata");

  TrainArgs train_a;
  auto* trn = app.add_subcommand("train", "Train a network for a fixed genotype");
  trn->add_option("--genotype", train_a.genotype, "Genotype JSON")->required();
  trn->add_option("--data", train_a.data, "Training NTCF")->required();
  trn->add_option("--val", train_a.val, "Validation NTCF");
  trn->add_option("--config", train_a.config, "Run config JSON");
  trn->add_option("--seed", train_a.seed, "Training seed");
  trn->add_option("--epochs", train_a.epochs, "Training epochs");
  trn->add_option("--out", train_a.out, "NTCW weights output")->required();
  trn->add_option("--history", train_a.history, "Per-epoch history JSON output");

  EvalArgs eval_a;
  auto* evl = app.add_subcommand("eval", "Evaluate trained weights");
  evl->add_option("--genotype", eval_a.genotype, "Genotype JSON")->required();
  evl->add_option("--weights", eval_a.weights, "NTCW weights")->required();
  evl->add_option("--data", eval_a.data, "NTCF dataset")->required();
  evl->add_option("--config", eval_a.config, "Run config JSON used for training");
  evl->add_option("--out", eval_a.out, "Report JSON output (default <weights>.eval.json)");
  evl->add_option("--batch", eval_a.batch, "Batch size")->check(CLI::PositiveNumber);

  AuditArgs audit_a;
  auto* aud = app.add_subcommand("audit", "Parameter counts of NAS-TC vs Timeception");
  aud->add_option("--genotype", audit_a.genotype, "Genotype JSON")->required();
  aud->add_option("--layers", audit_a.layers, "Largest layer count")->capture_default_str();
  aud->add_option("--config", audit_a.config, "Run config JSON (network section)");
  aud->add_option("--out", audit_a.out, "CSV output")->capture_default_str();

  GradArgs grad_a;
  auto* grd = app.add_subcommand("grad-check", "Finite-difference gradient suite");
  grd->add_option("--trials", grad_a.trials, "Random tensors per op")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grd->add_option("--seed", grad_a.seed, "Seed")->capture_default_str();
  grd->add_option("--tolerance", grad_a.tolerance, "Max relative error")->capture_default_str();
  grd->add_option("--out", grad_a.out, "Report JSON output")->capture_default_str();

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << NAS_TC_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitInvalid;
  }

  try {
    if (synth->parsed()) return run_synth(synth_a, args, out);
    if (srch->parsed()) return run_search(search_a, args, out);
    if (drv->parsed()) return run_derive(derive_a, args, out);
    if (trn->parsed()) return run_train(train_a, args, out);
    if (evl->parsed()) return run_eval(eval_a, args, out);
    if (aud->parsed()) return run_audit(audit_a, args, out);
    if (grd->parsed()) return run_grad_check(grad_a, args, out, err);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  err << "error: no subcommand\n" << app.help();
  return kExitInvalid;
}

}  // namespace nastc::cli
