// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "nas_tc/op_space.hpp"

namespace nastc {

GradCheckStats check_gradients(const std::function<Variable()>& loss,
                               std::span<Parameter* const> params,
                               const GradCheckOptions& opt) {
  zero_grad(params);
  const Variable root = loss();
  backward(root);
  const double f0 = root.value()[0];

  GradCheckStats st;
  double max_diff = 0, max_num = 0, max_ana = 0;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad();
    Tensor& v = p->value();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + opt.h;
      const double fp = loss().value()[0];
      v[i] = orig - opt.h;
      const double fm = loss().value()[0];
      v[i] = orig;
      const double central = (fp - fm) / (2 * opt.h);
      const double fwd = (fp - f0) / opt.h;
      const double bwd = (f0 - fm) / opt.h;
      if (std::abs(fwd - bwd) > opt.kink_tol * std::max(1.0, std::abs(central))) {
        ++st.skipped;
        continue;
      }
      ++st.checked;
      max_diff = std::max(max_diff, std::abs(analytic[i] - central));
      max_num = std::max(max_num, std::abs(central));
      max_ana = std::max(max_ana, std::abs(analytic[i]));
    }
  }
  st.rel_error = max_diff / std::max({max_num, max_ana, 1e-10});
  return st;
}

namespace {

struct Dims {
  std::size_t n, c, t, h, w;
};

Dims random_dims(std::mt19937_64& rng, std::size_t min_c = 1) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  return {pick(2, 4), pick(min_c, 8), pick(4, 8), pick(1, 2), pick(1, 2)};
}

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, scale);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor random_features(const Dims& d, std::mt19937_64& rng) {
  return random_tensor({d.n, d.c, d.t, d.h, d.w}, rng);
}

void randomize_affine(std::span<Parameter* const> params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> g(0.5, 1.5), b(-0.5, 0.5);
  for (Parameter* p : params) {
    if (p->name().ends_with(".gamma")) {
      for (double& v : p->value().data()) v = g(rng);
    } else if (p->name().ends_with(".beta")) {
      for (double& v : p->value().data()) v = b(rng);
    }
  }
}

// One trial: returns stats for a loss built by `make` over `params`.
using TrialFn = std::function<GradCheckStats(std::mt19937_64&, const GradCheckOptions&)>;

GradCheckResult run_case(const std::string& name, std::size_t salt, const TrialFn& trial,
                         const GradCheckOptions& opt) {
  GradCheckResult r;
  r.name = name;
  for (std::size_t k = 0; k < opt.trials; ++k) {
    std::mt19937_64 rng(opt.seed * 1000003ULL + salt * 7919ULL + k);
    const GradCheckStats st = trial(rng, opt);
    r.max_rel_error = std::max(r.max_rel_error, st.rel_error);
    r.checked += st.checked;
    r.skipped += st.skipped;
    ++r.trials;
  }
  return r;
}

// sum(f(x) * R) for a random upstream tensor R.
Variable weighted_loss(const Variable& y, const Tensor& r) {
  return sum(mul(y, Variable::constant(r)));
}

GradCheckStats op_trial(OpKind kind, std::mt19937_64& rng, const GradCheckOptions& opt) {
  const Dims d = random_dims(rng);
  Parameter x("x", random_features(d, rng));
  std::unique_ptr<Block> op = build_op(kind, d.c, true, rng, "op");
  std::vector<Parameter*> params = op->parameters();
  randomize_affine(params, rng);
  params.insert(params.begin(), &x);
  const Tensor r = random_features(d, rng);
  ForwardContext ctx{true, nullptr};
  return check_gradients(
      [&] { return weighted_loss(op->forward(Variable::leaf(x), ctx), r); }, params, opt);
}

GradCheckStats mixed_trial(std::mt19937_64& rng, const GradCheckOptions& opt) {
  Dims d = random_dims(rng);
  d.c = std::min<std::size_t>(d.c, 4);
  Parameter x("x", random_features(d, rng));
  Parameter alpha("alpha", random_tensor({kNumOps}, rng));
  MixedEdge edge("edge", d.c, false, rng);
  std::vector<Parameter*> params = edge.parameters();
  params.insert(params.begin(), &alpha);
  params.insert(params.begin(), &x);
  const Tensor r = random_features(d, rng);
  ForwardContext ctx{true, nullptr};
  return check_gradients(
      [&] {
        return weighted_loss(edge.forward(Variable::leaf(x), softmax(Variable::leaf(alpha)), ctx),
                             r);
      },
      params, opt);
}

GradCheckStats conv_trial(std::mt19937_64& rng, const GradCheckOptions& opt) {
  Dims d = random_dims(rng);
  std::vector<std::size_t> divisors;
  for (std::size_t g = 1; g <= d.c; ++g) {
    if (d.c % g == 0) divisors.push_back(g);
  }
  const std::size_t groups =
      divisors[std::uniform_int_distribution<std::size_t>(0, divisors.size() - 1)(rng)];
  const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
  const std::size_t dil = std::uniform_int_distribution<std::size_t>(1, 2)(rng);
  const std::size_t pad = dil * (k - 1);
  const std::size_t left = std::uniform_int_distribution<std::size_t>(0, pad)(rng);
  const std::size_t cout = groups * std::uniform_int_distribution<std::size_t>(1, 2)(rng);
  Parameter x("x", random_features(d, rng));
  Parameter w("w", random_tensor({cout, d.c / groups, k}, rng));
  const TemporalConvOptions o{k, dil, groups, left, pad - left};
  const Tensor r = random_tensor({d.n, cout, d.t, d.h, d.w}, rng);
  std::vector<Parameter*> params{&x, &w};
  return check_gradients(
      [&] { return weighted_loss(temporal_conv(Variable::leaf(x), Variable::leaf(w), o), r); },
      params, opt);
}

GradCheckStats pointwise_trial(std::mt19937_64& rng, const GradCheckOptions& opt) {
  const Dims d = random_dims(rng);
  const std::size_t cout = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
  Parameter x("x", random_features(d, rng));
  Parameter w("w", random_tensor({cout, d.c}, rng));
  const Tensor r = random_tensor({d.n, cout, d.t, d.h, d.w}, rng);
  std::vector<Parameter*> params{&x, &w};
  return check_gradients(
      [&] { return weighted_loss(pointwise_conv(Variable::leaf(x), Variable::leaf(w)), r); },
      params, opt);
}

GradCheckStats bn_trial(std::mt19937_64& rng, const GradCheckOptions& opt) {
  const Dims d = random_dims(rng);
  Parameter x("x", random_features(d, rng));
  Parameter g("g", random_tensor({d.c}, rng));
  Parameter b("b", random_tensor({d.c}, rng));
  BatchNormState state(d.c);
  const Tensor r = random_features(d, rng);
  std::vector<Parameter*> params{&x, &g, &b};
  return check_gradients(
      [&] {
        return weighted_loss(
            batch_norm(Variable::leaf(x), state, Variable::leaf(g), Variable::leaf(b), true), r);
      },
      params, opt);
}

GradCheckStats pool_trial(PoolKind kind, std::size_t stride, std::mt19937_64& rng,
                          const GradCheckOptions& opt) {
  const Dims d = random_dims(rng);
  Parameter x("x", random_features(d, rng));
  const std::size_t t_out = stride == 1 ? d.t : d.t / 2;
  const Tensor r = random_tensor({d.n, d.c, t_out, d.h, d.w}, rng);
  std::vector<Parameter*> params{&x};
  return check_gradients(
      [&] { return weighted_loss(pool_t(Variable::leaf(x), kind, 2, stride), r); }, params, opt);
}

GradCheckStats shuffle_trial(std::mt19937_64& rng, const GradCheckOptions& opt) {
  Dims d = random_dims(rng, 2);
  d.c -= d.c % 2;
  Parameter a("a", random_features(d, rng));
  Parameter b("b", random_features(d, rng));
  const Tensor r = random_tensor({d.n, d.c, d.t, d.h, d.w}, rng);
  std::vector<Parameter*> params{&a, &b};
  return check_gradients(
      [&] {
        const Variable cat = concat_channels(std::vector<Variable>{Variable::leaf(a), Variable::leaf(b)});
        const Variable sh = channel_shuffle(cat, 2);
        return weighted_loss(slice_channels(sh, d.c / 2, d.c), r);
      },
      params, opt);
}

GradCheckStats head_trial(bool multi_label, std::mt19937_64& rng, const GradCheckOptions& opt) {
  const Dims d = random_dims(rng);
  const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
  Parameter x("x", random_features(d, rng));
  Parameter w("w", random_tensor({k, d.c}, rng));
  Parameter b("b", random_tensor({k}, rng));
  Tensor y({d.n, k});
  std::uniform_int_distribution<std::size_t> cls(0, k - 1);
  for (std::size_t i = 0; i < d.n; ++i) {
    if (multi_label) {
      for (std::size_t j = 0; j < k; ++j) y[i * k + j] = (rng() & 1) ? 1.0 : 0.0;
    } else {
      y[i * k + cls(rng)] = 1.0;
    }
  }
  std::vector<Parameter*> params{&x, &w, &b};
  return check_gradients(
      [&] {
        const Variable z =
            linear(global_avg_pool(Variable::leaf(x)), Variable::leaf(w), Variable::leaf(b));
        return multi_label ? bce_with_logits(z, y) : softmax_cross_entropy(z, y);
      },
      params, opt);
}

GradCheckStats sigmoid_trial(std::mt19937_64& rng, const GradCheckOptions& opt) {
  const Dims d = random_dims(rng);
  Parameter x("x", random_features(d, rng));
  const Tensor r = random_features(d, rng);
  std::vector<Parameter*> params{&x};
  return check_gradients([&] { return weighted_loss(sigmoid(Variable::leaf(x)), r); }, params,
                         opt);
}

}  // namespace

std::vector<GradCheckResult> run_grad_check_suite(const GradCheckOptions& opt) {
  std::vector<GradCheckResult> out;
  std::size_t salt = 1;
  for (const OpSpec& spec : op_table()) {
    const OpKind kind = spec.kind;
    out.push_back(run_case(std::string(spec.name), salt++,
                           [kind](std::mt19937_64& rng, const GradCheckOptions& o) {
                             return op_trial(kind, rng, o);
                           },
                           opt));
  }
  out.push_back(run_case("mixed_op", salt++, mixed_trial, opt));
  out.push_back(run_case("temporal_conv", salt++, conv_trial, opt));
  out.push_back(run_case("pointwise_conv", salt++, pointwise_trial, opt));
  out.push_back(run_case("batch_norm", salt++, bn_trial, opt));
  out.push_back(run_case("max_pool_stride2", salt++,
                         [](std::mt19937_64& rng, const GradCheckOptions& o) {
                           return pool_trial(PoolKind::kMax, 2, rng, o);
                         },
                         opt));
  out.push_back(run_case("avg_pool_stride2", salt++,
                         [](std::mt19937_64& rng, const GradCheckOptions& o) {
                           return pool_trial(PoolKind::kAvg, 2, rng, o);
                         },
                         opt));
  out.push_back(run_case("concat_shuffle_slice", salt++, shuffle_trial, opt));
  out.push_back(run_case("sigmoid", salt++, sigmoid_trial, opt));
  out.push_back(run_case("head_bce", salt++,
                         [](std::mt19937_64& rng, const GradCheckOptions& o) {
                           return head_trial(true, rng, o);
                         },
                         opt));
  out.push_back(run_case("head_softmax_ce", salt++,
                         [](std::mt19937_64& rng, const GradCheckOptions& o) {
                           return head_trial(false, rng, o);
                         },
                         opt));
  return out;
}

}  // namespace nastc
