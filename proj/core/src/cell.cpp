// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/cell.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "nas_tc/errors.hpp"

namespace nastc {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<std::size_t, kCellNodes> kEdgeOffset{0, 2, 5, 9};

std::string ptr(const std::string& base, std::size_t i) {
  return base + "/" + std::to_string(i);
}

ojson parse_json(std::string_view text) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
}

void check_version(const ojson& doc) {
  if (!doc.is_object()) throw ParseError("", "document must be a JSON object");
  auto it = doc.find("version");
  if (it == doc.end()) throw ParseError("/version", "missing schema version");
  if (!it->is_string() || it->get<std::string>() != kSchemaVersion) {
    throw ParseError("/version", "expected \"" + std::string(kSchemaVersion) +
                                     "\", got " + it->dump());
  }
}

void reject_unknown(const ojson& obj, const std::string& base,
                    std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ParseError(base + "/" + it.key(), "unknown key");
    }
  }
}

}  // namespace

std::size_t edge_index(int node, int pred) {
  if (node < 0 || node >= kCellNodes || pred < 0 || pred >= node + kCellInputs) {
    throw ConfigError("edge_index: no edge " + std::to_string(pred) + " -> B" +
                      std::to_string(node));
  }
  return kEdgeOffset[static_cast<std::size_t>(node)] + static_cast<std::size_t>(pred);
}

// ---------------------------------------------------------------------------
// CellArch

CellArch::CellArch() {
  for (std::size_t e = 0; e < kCellEdges; ++e) {
    alphas_.push_back(std::make_unique<Parameter>("alpha.edge" + std::to_string(e),
                                                  Tensor({kNumOps})));
  }
}

CellArch::CellArch(std::mt19937_64& rng, double sigma) : CellArch() {
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& a : alphas_) {
    for (double& v : a->value().data()) v = dist(rng);
  }
}

CellArch::CellArch(const std::vector<AlphaRow>& rows) : CellArch() {
  if (rows.size() != kCellEdges) {
    throw ConfigError("CellArch: expected " + std::to_string(kCellEdges) +
                      " edges, got " + std::to_string(rows.size()));
  }
  for (std::size_t e = 0; e < kCellEdges; ++e) {
    std::copy(rows[e].begin(), rows[e].end(), alphas_[e]->value().data().begin());
  }
}

std::vector<Parameter*> CellArch::parameters() {
  std::vector<Parameter*> out;
  for (auto& a : alphas_) out.push_back(a.get());
  return out;
}

std::vector<AlphaRow> CellArch::rows() const {
  std::vector<AlphaRow> out(kCellEdges);
  for (std::size_t e = 0; e < kCellEdges; ++e) {
    std::span<const double> a = alpha(e);
    std::copy(a.begin(), a.end(), out[e].begin());
  }
  return out;
}

std::vector<Variable> CellArch::softmax_weights() {
  std::vector<Variable> out;
  out.reserve(kCellEdges);
  for (auto& a : alphas_) out.push_back(softmax(Variable::leaf(*a)));
  return out;
}

std::string serialize_arch(const CellArch& arch) {
  ojson doc;
  doc["version"] = std::string(kSchemaVersion);
  ojson rows = ojson::array();
  for (const AlphaRow& row : arch.rows()) rows.push_back(row);
  doc["alphas"] = std::move(rows);
  return doc.dump(2) + "\n";
}

CellArch parse_arch(std::string_view text) {
  const ojson doc = parse_json(text);
  check_version(doc);
  reject_unknown(doc, "", {"version", "alphas"});
  auto it = doc.find("alphas");
  if (it == doc.end()) throw ParseError("/alphas", "missing");
  if (!it->is_array() || it->size() != kCellEdges) {
    throw ParseError("/alphas", "expected an array of " + std::to_string(kCellEdges) +
                                    " edges");
  }
  std::vector<AlphaRow> rows(kCellEdges);
  for (std::size_t e = 0; e < kCellEdges; ++e) {
    const ojson& row = (*it)[e];
    const std::string where = ptr("/alphas", e);
    if (!row.is_array() || row.size() != kNumOps) {
      throw ParseError(where, "expected " + std::to_string(kNumOps) + " numbers");
    }
    for (std::size_t o = 0; o < kNumOps; ++o) {
      if (!row[o].is_number()) throw ParseError(ptr(where, o), "not a number");
      rows[e][o] = row[o].get<double>();
      if (!std::isfinite(rows[e][o])) throw ParseError(ptr(where, o), "not finite");
    }
  }
  return CellArch(rows);
}

// ---------------------------------------------------------------------------
// Genotype

void validate_genotype(const Genotype& g) {
  for (int j = 0; j < kCellNodes; ++j) {
    const auto& pair = g.nodes[static_cast<std::size_t>(j)];
    for (int s = 0; s < 2; ++s) {
      const GenotypeEdge& e = pair[static_cast<std::size_t>(s)];
      const std::string where =
          "genotype node B" + std::to_string(j) + " edge " + std::to_string(s);
      if (e.pred < 0 || e.pred >= j + kCellInputs) {
        throw ConfigError(where + ": predecessor " + std::to_string(e.pred) +
                          " is not an earlier node");
      }
      const auto k = static_cast<int>(e.op);
      if (k < 0 || k >= static_cast<int>(kNumOps)) {
        throw ConfigError(where + ": unknown op index " + std::to_string(k));
      }
      if (e.op == OpKind::kZero) throw ConfigError(where + ": zero op is not allowed");
    }
    if (pair[0].pred == pair[1].pred) {
      throw ConfigError("genotype node B" + std::to_string(j) +
                        ": both edges use predecessor " + std::to_string(pair[0].pred));
    }
  }
}

Genotype derive_genotype(const CellArch& arch) {
  Genotype g;
  for (int j = 0; j < kCellNodes; ++j) {
    struct Candidate {
      int pred;
      EdgeChoice choice;
    };
    std::vector<Candidate> cands;
    for (int i = 0; i < j + kCellInputs; ++i) {
      cands.push_back({i, discretize_edge(arch.alpha(edge_index(j, i)))});
    }
    // stable_sort keeps the lower predecessor first among equal strengths.
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.choice.strength > b.choice.strength;
                     });
    for (std::size_t s = 0; s < 2; ++s) {
      g.nodes[static_cast<std::size_t>(j)][s] = {cands[s].pred, cands[s].choice.op};
    }
  }
  return g;
}

std::string serialize_genotype(const Genotype& g) {
  validate_genotype(g);
  ojson doc;
  doc["version"] = std::string(kSchemaVersion);
  ojson nodes = ojson::array();
  for (const auto& pair : g.nodes) {
    ojson n = ojson::array();
    for (const GenotypeEdge& e : pair) {
      ojson edge;
      edge["pred"] = e.pred;
      edge["op"] = std::string(op_name(e.op));
      n.push_back(std::move(edge));
    }
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  ojson meta = ojson::object();
  if (g.meta.seed) meta["seed"] = *g.meta.seed;
  if (g.meta.epoch) meta["epoch"] = *g.meta.epoch;
  if (!g.meta.dataset.empty()) meta["dataset"] = g.meta.dataset;
  doc["meta"] = std::move(meta);
  return doc.dump(2) + "\n";
}

Genotype parse_genotype(std::string_view text) {
  const ojson doc = parse_json(text);
  check_version(doc);
  reject_unknown(doc, "", {"version", "nodes", "meta"});

  Genotype g;
  auto nodes = doc.find("nodes");
  if (nodes == doc.end()) throw ParseError("/nodes", "missing");
  if (!nodes->is_array() || nodes->size() != static_cast<std::size_t>(kCellNodes)) {
    throw ParseError("/nodes", "expected an array of " + std::to_string(kCellNodes) +
                                   " nodes");
  }
  for (std::size_t j = 0; j < static_cast<std::size_t>(kCellNodes); ++j) {
    const ojson& pair = (*nodes)[j];
    const std::string nbase = ptr("/nodes", j);
    if (!pair.is_array() || pair.size() != 2) {
      throw ParseError(nbase, "expected exactly 2 edges");
    }
    for (std::size_t s = 0; s < 2; ++s) {
      const ojson& edge = pair[s];
      const std::string ebase = ptr(nbase, s);
      if (!edge.is_object()) throw ParseError(ebase, "expected an object");
      reject_unknown(edge, ebase, {"pred", "op"});

      auto pred = edge.find("pred");
      if (pred == edge.end()) throw ParseError(ebase + "/pred", "missing");
      if (!pred->is_number_integer()) throw ParseError(ebase + "/pred", "not an integer");
      const auto p = pred->get<std::int64_t>();
      if (p < 0 || p >= static_cast<std::int64_t>(j) + kCellInputs) {
        throw ParseError(ebase + "/pred",
                         "predecessor " + std::to_string(p) + " is not earlier than B" +
                             std::to_string(j) + " (valid range 0.." +
                             std::to_string(j + kCellInputs - 1) + ")");
      }

      auto op = edge.find("op");
      if (op == edge.end()) throw ParseError(ebase + "/op", "missing");
      if (!op->is_string()) throw ParseError(ebase + "/op", "not a string");
      const std::string name = op->get<std::string>();
      const auto kind = op_from_name(name);
      if (!kind) throw ParseError(ebase + "/op", "unknown op \"" + name + "\"");
      if (*kind == OpKind::kZero) throw ParseError(ebase + "/op", "zero op is not allowed");

      g.nodes[j][s] = {static_cast<int>(p), *kind};
    }
    if (g.nodes[j][0].pred == g.nodes[j][1].pred) {
      throw ParseError(nbase + "/1/pred", "repeats predecessor " +
                                              std::to_string(g.nodes[j][0].pred));
    }
  }

  auto meta = doc.find("meta");
  if (meta != doc.end()) {
    if (!meta->is_object()) throw ParseError("/meta", "expected an object");
    reject_unknown(*meta, "/meta", {"seed", "epoch", "dataset"});
    if (auto it = meta->find("seed"); it != meta->end()) {
      if (!it->is_number_unsigned()) throw ParseError("/meta/seed", "not an unsigned integer");
      g.meta.seed = it->get<std::uint64_t>();
    }
    if (auto it = meta->find("epoch"); it != meta->end()) {
      if (!it->is_number_integer()) throw ParseError("/meta/epoch", "not an integer");
      g.meta.epoch = it->get<int>();
    }
    if (auto it = meta->find("dataset"); it != meta->end()) {
      if (!it->is_string()) throw ParseError("/meta/dataset", "not a string");
      g.meta.dataset = it->get<std::string>();
    }
  }
  return g;
}

std::array<int, kCellNodes> unit_operation_depths(const Genotype& g) {
  validate_genotype(g);
  std::array<int, kCellNodes + kCellInputs> depth{};
  for (int j = 0; j < kCellNodes; ++j) {
    int best = 0;
    for (const GenotypeEdge& e : g.nodes[static_cast<std::size_t>(j)]) {
      best = std::max(best, depth[static_cast<std::size_t>(e.pred)] + op_unit_count(e.op));
    }
    depth[static_cast<std::size_t>(j + kCellInputs)] = best;
  }
  return {depth[2], depth[3], depth[4], depth[5]};
}

// ---------------------------------------------------------------------------
// Modules

ProjectionUnit::ProjectionUnit(const std::string& name, std::size_t in_channels,
                               std::size_t out_channels, bool affine,
                               std::mt19937_64& rng)
    : weight_(name + ".pointwise", Tensor({out_channels, in_channels})),
      bn_(name + ".bn", out_channels, affine) {
  if (in_channels == 0 || out_channels == 0) {
    throw ConfigError("projection " + name + ": channel counts must be >= 1");
  }
  kaiming_uniform(weight_.value(), in_channels, rng);
}

Variable ProjectionUnit::forward(const Variable& x, const ForwardContext& ctx) {
  return bn_.forward(pointwise_conv(relu(x), Variable::leaf(weight_)), ctx);
}

void ProjectionUnit::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  bn_.collect_parameters(out);
}

void ProjectionUnit::collect_buffers(std::vector<NamedTensor>& out) {
  bn_.collect_buffers(out);
}

Cell::Cell(const std::string& name, std::size_t prev2_channels,
           std::size_t prev1_channels, std::size_t width, bool affine,
           std::mt19937_64& rng)
    : relaxed_(true),
      width_(width),
      pre0_(name + ".pre0", prev2_channels, width, affine, rng),
      pre1_(name + ".pre1", prev1_channels, width, affine, rng) {
  for (std::size_t e = 0; e < kCellEdges; ++e) {
    edges_.push_back(std::make_unique<MixedEdge>(name + ".edge" + std::to_string(e),
                                                 width, affine, rng));
  }
}

Cell::Cell(const std::string& name, std::size_t prev2_channels,
           std::size_t prev1_channels, std::size_t width, const Genotype& genotype,
           bool affine, std::mt19937_64& rng)
    : relaxed_(false),
      width_(width),
      genotype_(genotype),
      pre0_(name + ".pre0", prev2_channels, width, affine, rng),
      pre1_(name + ".pre1", prev1_channels, width, affine, rng) {
  validate_genotype(genotype);
  for (int j = 0; j < kCellNodes; ++j) {
    std::array<std::unique_ptr<Block>, 2> pair;
    for (std::size_t s = 0; s < 2; ++s) {
      const GenotypeEdge& e = genotype.nodes[static_cast<std::size_t>(j)][s];
      pair[s] = build_op(e.op, width, affine, rng,
                         name + ".node" + std::to_string(j) + ".edge" +
                             std::to_string(s) + "." + std::string(op_name(e.op)));
    }
    ops_.push_back(std::move(pair));
  }
}

Variable Cell::forward(const Variable& prev2, const Variable& prev1,
                       const ForwardContext& ctx,
                       std::span<const Variable> arch_weights) {
  const FeatureDims a = feature_dims(prev2.value(), "cell input I_{k-2}");
  const FeatureDims b = feature_dims(prev1.value(), "cell input I_{k-1}");
  if (a.n != b.n || a.t != b.t || a.h != b.h || a.w != b.w) {
    throw ConfigError("cell: inputs disagree on (N, T, H, W): " +
                      shape_string(prev2.shape()) + " vs " + shape_string(prev1.shape()));
  }
  if (relaxed_ && arch_weights.size() != kCellEdges) {
    throw ConfigError("cell: relaxed forward needs " + std::to_string(kCellEdges) +
                      " edge weight vectors, got " + std::to_string(arch_weights.size()));
  }

  std::vector<Variable> states;
  states.reserve(kCellInputs + kCellNodes);
  states.push_back(pre0_.forward(prev2, ctx));
  states.push_back(pre1_.forward(prev1, ctx));

  for (int j = 0; j < kCellNodes; ++j) {
    std::vector<Variable> terms;
    if (relaxed_) {
      for (int i = 0; i < j + kCellInputs; ++i) {
        const std::size_t e = edge_index(j, i);
        terms.push_back(edges_[e]->forward(states[static_cast<std::size_t>(i)],
                                           arch_weights[e], ctx));
      }
    } else {
      for (std::size_t s = 0; s < 2; ++s) {
        const GenotypeEdge& e = genotype_.nodes[static_cast<std::size_t>(j)][s];
        terms.push_back(ops_[static_cast<std::size_t>(j)][s]->forward(
            states[static_cast<std::size_t>(e.pred)], ctx));
      }
    }
    states.push_back(add_n(terms));
  }
  return concat_channels(std::span<const Variable>(states).subspan(kCellInputs));
}

namespace {

void copy_module(Module& from, Module& to, const char* what) {
  std::vector<Parameter*> src = from.parameters();
  std::vector<Parameter*> dst = to.parameters();
  std::vector<NamedTensor> sbuf = from.buffers();
  std::vector<NamedTensor> dbuf = to.buffers();
  if (sbuf.size() != dbuf.size()) {
    throw ConfigError(std::string("copy_chosen_weights_from: buffer mismatch in ") + what);
  }
  // A non-affine source leaves the target's BN gamma/beta at their initial
  // values; all other tensors are copied in order.
  auto split = [](const std::vector<Parameter*>& ps) {
    std::array<std::vector<Parameter*>, 2> out;  // {weights, bn affine}
    for (Parameter* p : ps) {
      const std::string& n = p->name();
      const bool bn = n.ends_with(".gamma") || n.ends_with(".beta");
      out[bn ? 1 : 0].push_back(p);
    }
    return out;
  };
  const auto s = split(src);
  const auto d = split(dst);
  for (std::size_t part = 0; part < 2; ++part) {
    if (part == 1 && (s[1].empty() || d[1].empty())) break;
    if (s[part].size() != d[part].size()) {
      throw ConfigError(std::string("copy_chosen_weights_from: parameter mismatch in ") +
                        what);
    }
    for (std::size_t i = 0; i < s[part].size(); ++i) {
      if (s[part][i]->value().shape() != d[part][i]->value().shape()) {
        throw ConfigError(std::string("copy_chosen_weights_from: shape mismatch in ") +
                          what);
      }
      d[part][i]->value() = s[part][i]->value();
    }
  }
  for (std::size_t i = 0; i < sbuf.size(); ++i) *dbuf[i].tensor = *sbuf[i].tensor;
}

}  // namespace

void Cell::copy_chosen_weights_from(Cell& relaxed) {
  if (relaxed_ || !relaxed.relaxed_ || relaxed.width_ != width_) {
    throw ConfigError("copy_chosen_weights_from: needs a discrete target and a relaxed "
                      "source of equal width");
  }
  copy_module(relaxed.pre0_, pre0_, "pre0");
  copy_module(relaxed.pre1_, pre1_, "pre1");
  for (int j = 0; j < kCellNodes; ++j) {
    for (std::size_t s = 0; s < 2; ++s) {
      const GenotypeEdge& e = genotype_.nodes[static_cast<std::size_t>(j)][s];
      copy_module(relaxed.edges_[edge_index(j, e.pred)]->op(e.op),
                  *ops_[static_cast<std::size_t>(j)][s], "edge op");
    }
  }
}

void Cell::collect_parameters(std::vector<Parameter*>& out) {
  pre0_.collect_parameters(out);
  pre1_.collect_parameters(out);
  for (auto& e : edges_) e->collect_parameters(out);
  for (auto& pair : ops_) {
    for (auto& op : pair) op->collect_parameters(out);
  }
}

void Cell::collect_buffers(std::vector<NamedTensor>& out) {
  pre0_.collect_buffers(out);
  pre1_.collect_buffers(out);
  for (auto& e : edges_) e->collect_buffers(out);
  for (auto& pair : ops_) {
    for (auto& op : pair) op->collect_buffers(out);
  }
}

}  // namespace nastc
