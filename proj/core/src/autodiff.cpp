// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include "nas_tc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <unordered_map>
#include <utility>

#include "nas_tc/errors.hpp"

namespace nastc {

namespace {

using std::size_t;

std::string dims_msg(const char* op, const std::string& what) {
  return std::string(op) + ": " + what;
}

Variable make_result(Tensor value, const char* op,
                     std::vector<NodePtr> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + " produced a non-finite value");
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  const bool needs_grad = std::any_of(
      inputs.begin(), inputs.end(),
      [](const NodePtr& in) { return in && in->requires_grad; });
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(fn);
  }
  return Variable(std::move(node));
}

void require_defined(const Variable& v, const char* op) {
  if (!v.defined()) throw UsageError(dims_msg(op, "undefined input variable"));
}

void axpy(Scalar a, const Scalar* x, Scalar* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

Scalar dot(const Scalar* x, const Scalar* y, size_t n) {
  Scalar s = 0;
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter / Node / Variable
// ---------------------------------------------------------------------------

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)), value_(std::move(value)), grad_(value_.shape()) {}

void Parameter::zero_grad() {
  if (grad_.shape() != value_.shape()) {
    grad_ = Tensor(value_.shape());
  } else {
    grad_.fill(0);
  }
}

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape());
  return grad;
}

Variable Variable::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Variable(std::move(node));
}

Variable Variable::leaf(Parameter& p) {
  auto node = std::make_shared<Node>();
  node->value = p.value();
  node->parameter = &p;
  node->requires_grad = !p.frozen();
  node->op = "parameter";
  return Variable(std::move(node));
}

const Tensor& Variable::value() const {
  if (!node_) throw UsageError("value() on an undefined Variable");
  return node_->value;
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

void backward(const Variable& root) {
  if (!root.defined() || root.value().empty()) {
    throw UsageError("backward() requires a completed forward pass");
  }
  if (root.value().size() != 1) {
    throw UsageError("backward() root must be a scalar, got shape " +
                     shape_string(root.value().shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative DFS post-order; state 1 = on stack, 2 = finished.
  std::vector<Node*> order;
  std::unordered_map<Node*, int> state;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  state[root.node().get()] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (!child->requires_grad) continue;
      auto it = state.find(child);
      if (it == state.end()) {
        state[child] = 1;
        stack.emplace_back(child, 0);
      } else if (it->second == 1) {
        throw InternalError("cycle detected in computation graph");
      }
    } else {
      state[node] = 2;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad = Tensor();
  root.node()->grad_buffer()[0] = 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty()) continue;
    if (n.backward_fn) n.backward_fn(n);
    if (n.parameter != nullptr) {
      Tensor& g = n.parameter->grad();
      if (g.shape() != n.grad.shape()) g = Tensor(n.grad.shape());
      axpy(1, n.grad.data().data(), g.data().data(), g.size());
    }
  }
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

Variable temporal_conv(const Variable& x, const Variable& w,
                       const TemporalConvOptions& opt) {
  constexpr const char* kOp = "temporal_conv";
  require_defined(x, kOp);
  require_defined(w, kOp);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const FeatureDims d = feature_dims(xv, "temporal_conv input");
  if (wv.rank() != 3) {
    throw ConfigError(dims_msg(kOp, "kernel must be rank 3, got " +
                                        shape_string(wv.shape())));
  }
  if (opt.groups == 0 || d.c % opt.groups != 0) {
    throw ConfigError(dims_msg(kOp, "input channels " + std::to_string(d.c) +
                                        " not divisible by groups " +
                                        std::to_string(opt.groups)));
  }
  const size_t cout = wv.dim(0);
  const size_t cin_g = d.c / opt.groups;
  const size_t k = wv.dim(2);
  if (wv.dim(1) != cin_g || cout % opt.groups != 0 || k != opt.kernel ||
      k == 0) {
    throw ConfigError(dims_msg(kOp, "kernel shape " + shape_string(wv.shape()) +
                                        " incompatible with input " +
                                        shape_string(xv.shape())));
  }
  if (opt.dilation == 0 ||
      opt.pad_left + opt.pad_right != opt.dilation * (k - 1)) {
    throw ConfigError(dims_msg(kOp, "padding must preserve T"));
  }
  if (!xv.all_finite()) throw NumericError(dims_msg(kOp, "non-finite input"));

  const size_t T = d.t, S = d.spatial(), plane = T * S;
  const size_t cout_g = cout / opt.groups;
  const auto shift_of = [&](size_t j) {
    return static_cast<std::ptrdiff_t>(j * opt.dilation) -
           static_cast<std::ptrdiff_t>(opt.pad_left);
  };
  // Valid output range [t0, t1) for a given tap shift.
  const auto range_of = [T](std::ptrdiff_t shift) {
    const auto t_count = static_cast<std::ptrdiff_t>(T);
    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(t_count, t_count - shift);
    return std::pair<std::ptrdiff_t, std::ptrdiff_t>(t0, std::max(t0, t1));
  };

  Tensor out({d.n, cout, d.t, d.h, d.w});
  for (size_t n = 0; n < d.n; ++n) {
    for (size_t co = 0; co < cout; ++co) {
      const size_t grp = co / cout_g;
      Scalar* o = out.data().data() + (n * cout + co) * plane;
      for (size_t cl = 0; cl < cin_g; ++cl) {
        const size_t ci = grp * cin_g + cl;
        const Scalar* xi = xv.data().data() + (n * d.c + ci) * plane;
        for (size_t j = 0; j < k; ++j) {
          const Scalar wgt = wv[(co * cin_g + cl) * k + j];
          const auto shift = shift_of(j);
          const auto [t0, t1] = range_of(shift);
          axpy(wgt, xi + (t0 + shift) * S, o + t0 * S, (t1 - t0) * S);
        }
      }
    }
  }

  return make_result(
      std::move(out), kOp, {x.node(), w.node()},
      [d, cout, cin_g, cout_g, k, S, plane, shift_of, range_of](Node& self) {
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        const Tensor& g = self.grad;
        const Tensor& xv = xn.value;
        const Tensor& wv = wn.value;
        Tensor* dx = xn.requires_grad ? &xn.grad_buffer() : nullptr;
        Tensor* dw = wn.requires_grad ? &wn.grad_buffer() : nullptr;
        for (size_t n = 0; n < d.n; ++n) {
          for (size_t co = 0; co < cout; ++co) {
            const size_t grp = co / cout_g;
            const Scalar* go = g.data().data() + (n * cout + co) * plane;
            for (size_t cl = 0; cl < cin_g; ++cl) {
              const size_t ci = grp * cin_g + cl;
              const size_t x_off = (n * d.c + ci) * plane;
              for (size_t j = 0; j < k; ++j) {
                const size_t widx = (co * cin_g + cl) * k + j;
                const auto shift = shift_of(j);
                const auto [t0, t1] = range_of(shift);
                const size_t len = (t1 - t0) * S;
                if (dx != nullptr) {
                  axpy(wv[widx], go + t0 * S,
                       dx->data().data() + x_off + (t0 + shift) * S, len);
                }
                if (dw != nullptr) {
                  (*dw)[widx] += dot(go + t0 * S,
                                     xv.data().data() + x_off + (t0 + shift) * S,
                                     len);
                }
              }
            }
          }
        }
      });
}

Variable pointwise_conv(const Variable& x, const Variable& w) {
  constexpr const char* kOp = "pointwise_conv";
  require_defined(x, kOp);
  require_defined(w, kOp);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const FeatureDims d = feature_dims(xv, "pointwise_conv input");
  if (wv.rank() != 2 || wv.dim(1) != d.c) {
    throw ConfigError(dims_msg(kOp, "weight " + shape_string(wv.shape()) +
                                        " does not match input channels " +
                                        std::to_string(d.c)));
  }
  const size_t cout = wv.dim(0), cin = d.c, P = d.plane();
  Tensor out({d.n, cout, d.t, d.h, d.w});
  for (size_t n = 0; n < d.n; ++n) {
    for (size_t o = 0; o < cout; ++o) {
      Scalar* dst = out.data().data() + (n * cout + o) * P;
      for (size_t i = 0; i < cin; ++i) {
        axpy(wv[o * cin + i], xv.data().data() + (n * cin + i) * P, dst, P);
      }
    }
  }
  return make_result(std::move(out), kOp, {x.node(), w.node()},
                     [d, cout, cin, P](Node& self) {
                       Node& xn = *self.inputs[0];
                       Node& wn = *self.inputs[1];
                       const Tensor& g = self.grad;
                       Tensor* dx = xn.requires_grad ? &xn.grad_buffer() : nullptr;
                       Tensor* dw = wn.requires_grad ? &wn.grad_buffer() : nullptr;
                       for (size_t n = 0; n < d.n; ++n) {
                         for (size_t o = 0; o < cout; ++o) {
                           const Scalar* go = g.data().data() + (n * cout + o) * P;
                           for (size_t i = 0; i < cin; ++i) {
                             const size_t xo = (n * cin + i) * P;
                             if (dx != nullptr) {
                               axpy(wn.value[o * cin + i], go,
                                    dx->data().data() + xo, P);
                             }
                             if (dw != nullptr) {
                               (*dw)[o * cin + i] +=
                                   dot(go, xn.value.data().data() + xo, P);
                             }
                           }
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Variable relu(const Variable& x) {
  require_defined(x, "relu");
  Tensor out = x.value();
  for (Scalar& v : out.data()) v = v > 0 ? v : 0;
  return make_result(std::move(out), "relu", {x.node()}, [](Node& self) {
    Node& xn = *self.inputs[0];
    Tensor& dx = xn.grad_buffer();
    for (size_t i = 0; i < dx.size(); ++i) {
      if (xn.value[i] > 0) dx[i] += self.grad[i];
    }
  });
}

Variable sigmoid(const Variable& x) {
  require_defined(x, "sigmoid");
  Tensor out = x.value();
  for (Scalar& v : out.data()) {
    v = v >= 0 ? 1 / (1 + std::exp(-v)) : std::exp(v) / (1 + std::exp(v));
  }
  return make_result(std::move(out), "sigmoid", {x.node()}, [](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (size_t i = 0; i < dx.size(); ++i) {
      const Scalar s = self.value[i];
      dx[i] += self.grad[i] * s * (1 - s);
    }
  });
}

Variable add(const Variable& a, const Variable& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  if (a.shape() != b.shape()) {
    throw ConfigError("add: shape mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  }
  Tensor out = a.value();
  axpy(1, b.value().data().data(), out.data().data(), out.size());
  return make_result(std::move(out), "add", {a.node(), b.node()},
                     [](Node& self) {
                       for (auto& in : self.inputs) {
                         if (!in->requires_grad) continue;
                         axpy(1, self.grad.data().data(),
                              in->grad_buffer().data().data(), self.grad.size());
                       }
                     });
}

Variable add_n(std::span<const Variable> xs) {
  if (xs.empty()) throw ConfigError("add_n: empty input list");
  std::vector<NodePtr> inputs;
  Tensor out = xs[0].value();
  inputs.push_back(xs[0].node());
  for (size_t i = 1; i < xs.size(); ++i) {
    if (xs[i].shape() != out.shape()) {
      throw ConfigError("add_n: shape mismatch " + shape_string(out.shape()) +
                        " vs " + shape_string(xs[i].shape()));
    }
    axpy(1, xs[i].value().data().data(), out.data().data(), out.size());
    inputs.push_back(xs[i].node());
  }
  return make_result(std::move(out), "add_n", std::move(inputs), [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      axpy(1, self.grad.data().data(), in->grad_buffer().data().data(),
           self.grad.size());
    }
  });
}

Variable scale(const Variable& x, Scalar factor) {
  require_defined(x, "scale");
  Tensor out = x.value();
  for (Scalar& v : out.data()) v *= factor;
  return make_result(std::move(out), "scale", {x.node()}, [factor](Node& self) {
    axpy(factor, self.grad.data().data(),
         self.inputs[0]->grad_buffer().data().data(), self.grad.size());
  });
}

Variable mul(const Variable& a, const Variable& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  if (a.shape() != b.shape()) {
    throw ConfigError("mul: shape mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  }
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), "mul", {a.node(), b.node()}, [](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (an.requires_grad) {
      Tensor& da = an.grad_buffer();
      for (size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      Tensor& db = bn.grad_buffer();
      for (size_t i = 0; i < db.size(); ++i) db[i] += self.grad[i] * an.value[i];
    }
  });
}

Variable sum(const Variable& x) {
  require_defined(x, "sum");
  Scalar s = 0;
  for (Scalar v : x.value().data()) s += v;
  return make_result(Tensor({1}, std::vector<Scalar>{s}), "sum", {x.node()},
                     [](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       const Scalar g = self.grad[0];
                       for (Scalar& v : dx.data()) v += g;
                     });
}

// ---------------------------------------------------------------------------
// Batch normalisation
// ---------------------------------------------------------------------------

BatchNormState::BatchNormState(std::size_t channels)
    : running_mean({channels}, 0.0), running_var({channels}, 1.0) {}

Variable batch_norm(const Variable& x, BatchNormState& state,
                    const Variable& gamma, const Variable& beta, bool training) {
  constexpr const char* kOp = "batch_norm";
  require_defined(x, kOp);
  const Tensor& xv = x.value();
  const FeatureDims d = feature_dims(xv, "batch_norm input");
  const size_t C = d.c, P = d.plane(), M = d.n * P;
  if (state.running_mean.size() != C || state.running_var.size() != C) {
    throw ConfigError(dims_msg(kOp, "state has " +
                                        std::to_string(state.running_mean.size()) +
                                        " channels, input has " + std::to_string(C)));
  }
  const bool affine = gamma.defined();
  if (affine != beta.defined()) {
    throw ConfigError(dims_msg(kOp, "gamma and beta must both be given or both omitted"));
  }
  if (affine && (gamma.value().size() != C || beta.value().size() != C)) {
    throw ConfigError(dims_msg(kOp, "affine parameters do not match channels"));
  }
  if (training && M < 2) {
    throw ConfigError(dims_msg(kOp, "training mode needs at least 2 values per channel"));
  }

  std::vector<Scalar> inv_std(C);
  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (size_t c = 0; c < C; ++c) {
    Scalar mean = 0, var = 0;
    if (training) {
      for (size_t n = 0; n < d.n; ++n) {
        const Scalar* src = xv.data().data() + (n * C + c) * P;
        for (size_t p = 0; p < P; ++p) mean += src[p];
      }
      mean /= static_cast<Scalar>(M);
      for (size_t n = 0; n < d.n; ++n) {
        const Scalar* src = xv.data().data() + (n * C + c) * P;
        for (size_t p = 0; p < P; ++p) var += (src[p] - mean) * (src[p] - mean);
      }
      var /= static_cast<Scalar>(M);
      const Scalar unbiased = var * static_cast<Scalar>(M) / static_cast<Scalar>(M - 1);
      state.running_mean[c] =
          (1 - state.momentum) * state.running_mean[c] + state.momentum * mean;
      state.running_var[c] =
          (1 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    inv_std[c] = 1 / std::sqrt(var + state.eps);
    const Scalar g = affine ? gamma.value()[c] : 1;
    const Scalar b = affine ? beta.value()[c] : 0;
    for (size_t n = 0; n < d.n; ++n) {
      const size_t off = (n * C + c) * P;
      for (size_t p = 0; p < P; ++p) {
        const Scalar h = (xv[off + p] - mean) * inv_std[c];
        xhat[off + p] = h;
        out[off + p] = g * h + b;
      }
    }
  }

  std::vector<NodePtr> inputs{x.node()};
  if (affine) {
    inputs.push_back(gamma.node());
    inputs.push_back(beta.node());
  }
  return make_result(
      std::move(out), kOp, std::move(inputs),
      [d, C, P, M, affine, training, inv_std = std::move(inv_std),
       xhat = std::move(xhat)](Node& self) {
        Node& xn = *self.inputs[0];
        const Tensor& g = self.grad;
        Tensor* dgamma = nullptr;
        Tensor* dbeta = nullptr;
        if (affine) {
          if (self.inputs[1]->requires_grad) dgamma = &self.inputs[1]->grad_buffer();
          if (self.inputs[2]->requires_grad) dbeta = &self.inputs[2]->grad_buffer();
        }
        for (size_t c = 0; c < C; ++c) {
          const Scalar gm = affine ? self.inputs[1]->value[c] : 1;
          Scalar sum_g = 0, sum_gh = 0;
          for (size_t n = 0; n < d.n; ++n) {
            const size_t off = (n * C + c) * P;
            for (size_t p = 0; p < P; ++p) {
              sum_g += g[off + p];
              sum_gh += g[off + p] * xhat[off + p];
            }
          }
          if (dgamma != nullptr) (*dgamma)[c] += sum_gh;
          if (dbeta != nullptr) (*dbeta)[c] += sum_g;
          if (!xn.requires_grad) continue;
          Tensor& dx = xn.grad_buffer();
          const Scalar inv_m = 1 / static_cast<Scalar>(M);
          for (size_t n = 0; n < d.n; ++n) {
            const size_t off = (n * C + c) * P;
            for (size_t p = 0; p < P; ++p) {
              if (training) {
                dx[off + p] += gm * inv_std[c] *
                               (g[off + p] - inv_m * sum_g -
                                xhat[off + p] * inv_m * sum_gh);
              } else {
                dx[off + p] += gm * inv_std[c] * g[off + p];
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Temporal pooling
// ---------------------------------------------------------------------------

Variable pool_t(const Variable& x, PoolKind kind, std::size_t kernel,
                std::size_t stride) {
  constexpr const char* kOp = "pool_t";
  require_defined(x, kOp);
  const Tensor& xv = x.value();
  const FeatureDims d = feature_dims(xv, "pool_t input");
  if (d.t == 0) throw ConfigError(dims_msg(kOp, "T must be positive"));
  if (kernel == 0) throw ConfigError(dims_msg(kOp, "kernel must be positive"));
  if (stride != 1 && stride != 2) {
    throw ConfigError(dims_msg(kOp, "stride must be 1 or 2"));
  }
  if (stride == 2 && d.t < kernel) {
    throw ConfigError(dims_msg(kOp, "T shorter than the pooling window"));
  }
  const size_t S = d.spatial();
  const size_t t_out = stride == 1 ? d.t : (d.t - kernel) / stride + 1;
  // Window for output t starts at t*stride - pad.
  const auto pad = static_cast<std::ptrdiff_t>(stride == 1 ? kernel - 1 : 0);
  const auto T = static_cast<std::ptrdiff_t>(d.t);

  Tensor out({d.n, d.c, t_out, d.h, d.w});
  std::vector<std::uint32_t> argmax;  // flat source index per output (max only)
  if (kind == PoolKind::kMax) argmax.resize(out.size());
  for (size_t nc = 0; nc < d.n * d.c; ++nc) {
    const size_t in_off = nc * d.t * S;
    const size_t out_off = nc * t_out * S;
    for (size_t t = 0; t < t_out; ++t) {
      const std::ptrdiff_t start =
          static_cast<std::ptrdiff_t>(t * stride) - pad;
      for (size_t s = 0; s < S; ++s) {
        const size_t o = out_off + t * S + s;
        if (kind == PoolKind::kMax) {
          Scalar best = -std::numeric_limits<Scalar>::infinity();
          size_t best_idx = 0;
          for (size_t j = 0; j < kernel; ++j) {
            const std::ptrdiff_t ts = start + static_cast<std::ptrdiff_t>(j);
            if (ts < 0 || ts >= T) continue;
            const size_t idx = in_off + static_cast<size_t>(ts) * S + s;
            if (xv[idx] > best) {
              best = xv[idx];
              best_idx = idx;
            }
          }
          out[o] = best;
          argmax[o] = static_cast<std::uint32_t>(best_idx);
        } else {
          Scalar acc = 0;
          for (size_t j = 0; j < kernel; ++j) {
            const std::ptrdiff_t ts = start + static_cast<std::ptrdiff_t>(j);
            if (ts < 0 || ts >= T) continue;
            acc += xv[in_off + static_cast<size_t>(ts) * S + s];
          }
          out[o] = acc / static_cast<Scalar>(kernel);
        }
      }
    }
  }

  return make_result(
      std::move(out), kOp, {x.node()},
      [kind, kernel, stride, pad, T, S, t_out, nc_total = d.n * d.c,
       argmax = std::move(argmax)](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        const Tensor& g = self.grad;
        if (kind == PoolKind::kMax) {
          for (size_t o = 0; o < g.size(); ++o) dx[argmax[o]] += g[o];
          return;
        }
        const Scalar inv_k = 1 / static_cast<Scalar>(kernel);
        for (size_t nc = 0; nc < nc_total; ++nc) {
          const size_t in_off = nc * static_cast<size_t>(T) * S;
          const size_t out_off = nc * t_out * S;
          for (size_t t = 0; t < t_out; ++t) {
            const std::ptrdiff_t start =
                static_cast<std::ptrdiff_t>(t * stride) - pad;
            for (size_t j = 0; j < kernel; ++j) {
              const std::ptrdiff_t ts = start + static_cast<std::ptrdiff_t>(j);
              if (ts < 0 || ts >= T) continue;
              axpy(inv_k, g.data().data() + out_off + t * S,
                   dx.data().data() + in_off + static_cast<size_t>(ts) * S, S);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Softmax and mixing
// ---------------------------------------------------------------------------

std::vector<Scalar> softmax_values(std::span<const Scalar> v) {
  std::vector<Scalar> out(v.size());
  if (v.empty()) return out;
  const Scalar m = *std::max_element(v.begin(), v.end());
  Scalar z = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    z += out[i];
  }
  for (Scalar& o : out) o /= z;
  return out;
}

Variable softmax(const Variable& v) {
  require_defined(v, "softmax");
  if (v.value().rank() != 1 || v.value().size() == 0) {
    throw ConfigError("softmax: expected a non-empty rank-1 tensor, got " +
                      shape_string(v.shape()));
  }
  Tensor out(v.shape(), softmax_values(v.value().data()));
  return make_result(std::move(out), "softmax", {v.node()}, [](Node& self) {
    const Tensor& y = self.value;
    const Scalar gy = dot(self.grad.data().data(), y.data().data(), y.size());
    Tensor& dv = self.inputs[0]->grad_buffer();
    for (size_t i = 0; i < y.size(); ++i) dv[i] += y[i] * (self.grad[i] - gy);
  });
}

Variable weighted_sum(std::span<const Variable> xs, const Variable& weights) {
  constexpr const char* kOp = "weighted_sum";
  require_defined(weights, kOp);
  const Tensor& wv = weights.value();
  if (xs.empty()) throw ConfigError(dims_msg(kOp, "empty input list"));
  if (wv.rank() != 1 || wv.size() != xs.size()) {
    throw ConfigError(dims_msg(kOp, std::to_string(xs.size()) +
                                        " inputs but weight vector " +
                                        shape_string(wv.shape())));
  }
  Tensor out(xs[0].shape());
  std::vector<NodePtr> inputs{weights.node()};
  for (size_t o = 0; o < xs.size(); ++o) {
    require_defined(xs[o], kOp);
    if (xs[o].shape() != out.shape()) {
      throw ConfigError(dims_msg(kOp, "shape mismatch " + shape_string(out.shape()) +
                                          " vs " + shape_string(xs[o].shape())));
    }
    axpy(wv[o], xs[o].value().data().data(), out.data().data(), out.size());
    inputs.push_back(xs[o].node());
  }
  return make_result(std::move(out), kOp, std::move(inputs), [](Node& self) {
    Node& wn = *self.inputs[0];
    const Tensor& g = self.grad;
    for (size_t o = 1; o < self.inputs.size(); ++o) {
      Node& xn = *self.inputs[o];
      if (wn.requires_grad) {
        wn.grad_buffer()[o - 1] += dot(g.data().data(), xn.value.data().data(), g.size());
      }
      if (xn.requires_grad) {
        axpy(wn.value[o - 1], g.data().data(), xn.grad_buffer().data().data(),
             g.size());
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Channel plumbing
// ---------------------------------------------------------------------------

Variable concat_channels(std::span<const Variable> xs) {
  constexpr const char* kOp = "concat_channels";
  if (xs.empty()) throw ConfigError(dims_msg(kOp, "empty input list"));
  const FeatureDims d0 = feature_dims(xs[0].value(), "concat_channels input");
  size_t total_c = 0;
  std::vector<size_t> offsets;
  for (const Variable& x : xs) {
    require_defined(x, kOp);
    const FeatureDims d = feature_dims(x.value(), "concat_channels input");
    if (d.n != d0.n || d.t != d0.t || d.h != d0.h || d.w != d0.w) {
      throw ConfigError(dims_msg(kOp, "inputs disagree outside the channel axis: " +
                                          shape_string(xs[0].shape()) + " vs " +
                                          shape_string(x.shape())));
    }
    offsets.push_back(total_c);
    total_c += d.c;
  }
  const size_t P = d0.plane();
  Tensor out({d0.n, total_c, d0.t, d0.h, d0.w});
  std::vector<NodePtr> inputs;
  for (size_t i = 0; i < xs.size(); ++i) {
    const Tensor& xv = xs[i].value();
    const size_t c = xv.dim(1);
    for (size_t n = 0; n < d0.n; ++n) {
      std::copy_n(xv.data().data() + n * c * P, c * P,
                  out.data().data() + (n * total_c + offsets[i]) * P);
    }
    inputs.push_back(xs[i].node());
  }
  return make_result(std::move(out), kOp, std::move(inputs),
                     [offsets = std::move(offsets), total_c, P,
                      batch = d0.n](Node& self) {
                       for (size_t i = 0; i < self.inputs.size(); ++i) {
                         Node& in = *self.inputs[i];
                         if (!in.requires_grad) continue;
                         const size_t c = in.value.dim(1);
                         Tensor& dx = in.grad_buffer();
                         for (size_t n = 0; n < batch; ++n) {
                           axpy(1, self.grad.data().data() + (n * total_c + offsets[i]) * P,
                                dx.data().data() + n * c * P, c * P);
                         }
                       }
                     });
}

Variable slice_channels(const Variable& x, std::size_t begin, std::size_t count) {
  constexpr const char* kOp = "slice_channels";
  require_defined(x, kOp);
  const FeatureDims d = feature_dims(x.value(), "slice_channels input");
  if (count == 0 || begin + count > d.c) {
    throw ConfigError(dims_msg(kOp, "range [" + std::to_string(begin) + ", " +
                                        std::to_string(begin + count) +
                                        ") outside " + std::to_string(d.c) +
                                        " channels"));
  }
  const size_t P = d.plane();
  Tensor out({d.n, count, d.t, d.h, d.w});
  for (size_t n = 0; n < d.n; ++n) {
    std::copy_n(x.value().data().data() + (n * d.c + begin) * P, count * P,
                out.data().data() + n * count * P);
  }
  return make_result(std::move(out), kOp, {x.node()},
                     [d, begin, count, P](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       for (size_t n = 0; n < d.n; ++n) {
                         axpy(1, self.grad.data().data() + n * count * P,
                              dx.data().data() + (n * d.c + begin) * P, count * P);
                       }
                     });
}

Variable channel_shuffle(const Variable& x, std::size_t groups) {
  constexpr const char* kOp = "channel_shuffle";
  require_defined(x, kOp);
  const FeatureDims d = feature_dims(x.value(), "channel_shuffle input");
  if (groups == 0 || d.c % groups != 0) {
    throw ConfigError(dims_msg(kOp, std::to_string(d.c) +
                                        " channels not divisible by " +
                                        std::to_string(groups) + " groups"));
  }
  const size_t per = d.c / groups, P = d.plane();
  // dest[j * groups + i] = src[i * per + j]
  std::vector<size_t> src_of(d.c);
  for (size_t i = 0; i < groups; ++i) {
    for (size_t j = 0; j < per; ++j) src_of[j * groups + i] = i * per + j;
  }
  Tensor out(x.shape());
  for (size_t n = 0; n < d.n; ++n) {
    for (size_t c = 0; c < d.c; ++c) {
      std::copy_n(x.value().data().data() + (n * d.c + src_of[c]) * P, P,
                  out.data().data() + (n * d.c + c) * P);
    }
  }
  return make_result(std::move(out), kOp, {x.node()},
                     [d, P, src_of = std::move(src_of)](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       for (size_t n = 0; n < d.n; ++n) {
                         for (size_t c = 0; c < d.c; ++c) {
                           axpy(1, self.grad.data().data() + (n * d.c + c) * P,
                                dx.data().data() + (n * d.c + src_of[c]) * P, P);
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// Classifier head
// ---------------------------------------------------------------------------

Variable global_avg_pool(const Variable& x) {
  require_defined(x, "global_avg_pool");
  const FeatureDims d = feature_dims(x.value(), "global_avg_pool input");
  const size_t P = d.plane();
  if (P == 0) throw ConfigError("global_avg_pool: empty temporal/spatial extent");
  Tensor out({d.n, d.c});
  for (size_t nc = 0; nc < d.n * d.c; ++nc) {
    Scalar s = 0;
    const Scalar* src = x.value().data().data() + nc * P;
    for (size_t p = 0; p < P; ++p) s += src[p];
    out[nc] = s / static_cast<Scalar>(P);
  }
  return make_result(std::move(out), "global_avg_pool", {x.node()},
                     [P](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       const Scalar inv = 1 / static_cast<Scalar>(P);
                       for (size_t nc = 0; nc < self.grad.size(); ++nc) {
                         const Scalar g = self.grad[nc] * inv;
                         Scalar* dst = dx.data().data() + nc * P;
                         for (size_t p = 0; p < P; ++p) dst[p] += g;
                       }
                     });
}

Variable linear(const Variable& x, const Variable& w, const Variable& b) {
  constexpr const char* kOp = "linear";
  require_defined(x, kOp);
  require_defined(w, kOp);
  require_defined(b, kOp);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 ||
      wv.dim(1) != xv.dim(1) || bv.dim(0) != wv.dim(0)) {
    throw ConfigError(dims_msg(kOp, "incompatible shapes x" + shape_string(xv.shape()) +
                                        " w" + shape_string(wv.shape()) + " b" +
                                        shape_string(bv.shape())));
  }
  const size_t N = xv.dim(0), D = xv.dim(1), K = wv.dim(0);
  Tensor out({N, K});
  for (size_t n = 0; n < N; ++n) {
    for (size_t k = 0; k < K; ++k) {
      out[n * K + k] = bv[k] + dot(xv.data().data() + n * D, wv.data().data() + k * D, D);
    }
  }
  return make_result(std::move(out), kOp, {x.node(), w.node(), b.node()},
                     [N, D, K](Node& self) {
                       Node& xn = *self.inputs[0];
                       Node& wn = *self.inputs[1];
                       Node& bn = *self.inputs[2];
                       const Tensor& g = self.grad;
                       for (size_t n = 0; n < N; ++n) {
                         for (size_t k = 0; k < K; ++k) {
                           const Scalar gk = g[n * K + k];
                           if (xn.requires_grad) {
                             axpy(gk, wn.value.data().data() + k * D,
                                  xn.grad_buffer().data().data() + n * D, D);
                           }
                           if (wn.requires_grad) {
                             axpy(gk, xn.value.data().data() + n * D,
                                  wn.grad_buffer().data().data() + k * D, D);
                           }
                           if (bn.requires_grad) bn.grad_buffer()[k] += gk;
                         }
                       }
                     });
}

Variable dropout(const Variable& x, double rate, std::mt19937_64& rng,
                 bool training) {
  require_defined(x, "dropout");
  if (rate < 0 || rate >= 1) throw ConfigError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0) return x;
  std::bernoulli_distribution keep(1 - rate);
  const Scalar inv = 1 / (1 - rate);
  Tensor mask(x.shape());
  for (Scalar& m : mask.data()) m = keep(rng) ? inv : 0;
  Tensor out = x.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_result(std::move(out), "dropout", {x.node()},
                     [mask = std::move(mask)](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       for (size_t i = 0; i < dx.size(); ++i) {
                         dx[i] += self.grad[i] * mask[i];
                       }
                     });
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Variable bce_with_logits(const Variable& logits, const Tensor& targets) {
  require_defined(logits, "bce_with_logits");
  const Tensor& z = logits.value();
  if (z.shape() != targets.shape() || z.size() == 0) {
    throw ConfigError("bce_with_logits: logits " + shape_string(z.shape()) +
                      " vs targets " + shape_string(targets.shape()));
  }
  const Scalar inv = 1 / static_cast<Scalar>(z.size());
  Scalar loss = 0;
  for (size_t i = 0; i < z.size(); ++i) {
    loss += std::max<Scalar>(z[i], 0) - z[i] * targets[i] +
            std::log1p(std::exp(-std::abs(z[i])));
  }
  return make_result(Tensor({1}, std::vector<Scalar>{loss * inv}),
                     "bce_with_logits", {logits.node()},
                     [targets, inv](Node& self) {
                       Node& zn = *self.inputs[0];
                       Tensor& dz = zn.grad_buffer();
                       const Scalar g = self.grad[0] * inv;
                       for (size_t i = 0; i < dz.size(); ++i) {
                         const Scalar v = zn.value[i];
                         const Scalar s = v >= 0 ? 1 / (1 + std::exp(-v))
                                                 : std::exp(v) / (1 + std::exp(v));
                         dz[i] += g * (s - targets[i]);
                       }
                     });
}

Variable softmax_cross_entropy(const Variable& logits, const Tensor& targets) {
  require_defined(logits, "softmax_cross_entropy");
  const Tensor& z = logits.value();
  if (z.rank() != 2 || z.shape() != targets.shape() || z.size() == 0) {
    throw ConfigError("softmax_cross_entropy: logits " + shape_string(z.shape()) +
                      " vs targets " + shape_string(targets.shape()));
  }
  const size_t N = z.dim(0), K = z.dim(1);
  Tensor probs(z.shape());
  Scalar loss = 0;
  for (size_t n = 0; n < N; ++n) {
    const auto row = z.data().subspan(n * K, K);
    const Scalar m = *std::max_element(row.begin(), row.end());
    Scalar lse = 0;
    for (Scalar v : row) lse += std::exp(v - m);
    lse = m + std::log(lse);
    for (size_t k = 0; k < K; ++k) {
      probs[n * K + k] = std::exp(row[k] - lse);
      loss -= targets[n * K + k] * (row[k] - lse);
    }
  }
  const Scalar inv = 1 / static_cast<Scalar>(N);
  return make_result(Tensor({1}, std::vector<Scalar>{loss * inv}),
                     "softmax_cross_entropy", {logits.node()},
                     [targets, probs = std::move(probs), inv, N, K](Node& self) {
                       Tensor& dz = self.inputs[0]->grad_buffer();
                       const Scalar g = self.grad[0] * inv;
                       for (size_t n = 0; n < N; ++n) {
                         Scalar mass = 0;
                         for (size_t k = 0; k < K; ++k) mass += targets[n * K + k];
                         for (size_t k = 0; k < K; ++k) {
                           dz[n * K + k] +=
                               g * (mass * probs[n * K + k] - targets[n * K + k]);
                         }
                       }
                     });
}

}  // namespace nastc
