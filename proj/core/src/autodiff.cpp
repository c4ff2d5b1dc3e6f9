// Copyright 2026 The UST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ust/autodiff.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <limits>

#include "ust/errors.hpp"

namespace ust::ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("operands recorded on different tapes");
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) grad = Tensor(value.shape());
  grad.fill(0.0);
}

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{p.value, {}, {}, &p, recording_});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, bool needs_grad, BackwardFn fn) {
  const bool track = recording_ && needs_grad;
  nodes_.push_back(Node{std::move(value), {}, track ? std::move(fn) : BackwardFn{}, nullptr, track});
  return Var{this, nodes_.size() - 1};
}

bool Tape::any_needs_grad(std::initializer_list<Var> vars) const {
  if (!recording_) return false;
  return std::any_of(vars.begin(), vars.end(), [this](Var v) { return nodes_[v.id].needs_grad; });
}

Tensor& Tape::grad_acc(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.same_shape(n.value)) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward on a variable from another tape");
  if (!recording_) throw ContractError("backward on a tape that does not record gradients");
  if (value(loss).size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + value(loss).shape_string());
  }
  for (auto& n : nodes_) {
    if (n.needs_grad) {
      n.grad = Tensor(n.value.shape());
    } else {
      n.grad = Tensor();
    }
  }
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      if (!n.param->grad.same_shape(n.param->value)) n.param->zero_grad();
      add_into(n.param->grad, n.grad);
    }
  }
}

// ---- kernels ---------------------------------------------------------------

namespace {

using Lane = double __attribute__((vector_size(64)));

inline Lane load_lane(const double* p) {
  Lane v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store_lane(double* p, Lane v) { std::memcpy(p, &v, sizeof(v)); }

// Rows [0, R) of `a` times columns [j, j + 8 * L) of `b`, sums held in registers.
// Each output element is produced by the same sequence: start value, then += a(r,i) * b(i,j)
// for i = 0, 1, ..., k - 1. Row blocking therefore never changes a row's bits.
template <int R, int L>
void gemm_tile(const double* a, std::size_t k, const double* b, std::size_t m, double* o, std::size_t j,
               bool accumulate) {
  Lane acc[R][L];
  for (int r = 0; r < R; ++r)
    for (int l = 0; l < L; ++l) acc[r][l] = accumulate ? load_lane(o + r * m + j + 8 * l) : Lane{};
  for (std::size_t i = 0; i < k; ++i) {
    const double* brow = b + i * m + j;
    Lane bl[L];
    for (int l = 0; l < L; ++l) bl[l] = load_lane(brow + 8 * l);
    for (int r = 0; r < R; ++r) {
      const double av = a[r * k + i];
      for (int l = 0; l < L; ++l) acc[r][l] += av * bl[l];
    }
  }
  for (int r = 0; r < R; ++r)
    for (int l = 0; l < L; ++l) store_lane(o + r * m + j + 8 * l, acc[r][l]);
}

template <int R>
void gemm_row_block(const double* a, std::size_t k, const double* b, std::size_t m, double* o, bool accumulate) {
  std::size_t j = 0;
  for (; j + 32 <= m; j += 32) gemm_tile<R, 4>(a, k, b, m, o, j, accumulate);
  for (; j + 8 <= m; j += 8) gemm_tile<R, 1>(a, k, b, m, o, j, accumulate);
  for (; j < m; ++j) {
    for (int r = 0; r < R; ++r) {
      double acc = accumulate ? o[r * m + j] : 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += a[r * k + i] * b[i * m + j];
      o[r * m + j] = acc;
    }
  }
}

}  // namespace

void gemm_rows(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  require(b.rows() == k, "gemm: inner dimensions differ");
  require(out.rows() == n && out.cols() == m, "gemm: output shape");
  const double* ap = a.values().data();
  const double* bp = b.values().data();
  double* op = out.values().data();
  std::size_t r = 0;
  for (; r + 6 <= n; r += 6) gemm_row_block<6>(ap + r * k, k, bp, m, op + r * m, accumulate);
  for (; r < n; ++r) gemm_row_block<1>(ap + r * k, k, bp, m, op + r * m, accumulate);
}

Tensor transpose(const Tensor& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  Tensor t = Tensor::matrix(m, n);
  const double* src = a.values().data();
  double* dst = t.values().data();
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < n; r0 += kBlock)
    for (std::size_t c0 = 0; c0 < m; c0 += kBlock)
      for (std::size_t r = r0; r < std::min(n, r0 + kBlock); ++r)
        for (std::size_t c = c0; c < std::min(m, c0 + kBlock); ++c) dst[c * n + r] = src[r * m + c];
  return t;
}

namespace {

// grad_b += a^T * g
void accumulate_at_g(const Tensor& a, const Tensor& g, Tensor& grad_b) { gemm_rows(transpose(a), g, grad_b, true); }

}  // namespace

// ---- operations --------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tape& tape = *a.tape;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.cols() == bv.rows(),
          "matmul: " + av.shape_string() + " x " + bv.shape_string());
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  gemm_rows(av, bv, out, false);
  return tape.push(std::move(out), tape.any_needs_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    if (t.needs_grad(a)) gemm_rows(g, transpose(t.value(b)), t.grad_acc(a.id), true);
    if (t.needs_grad(b)) accumulate_at_g(t.value(a), g, t.grad_acc(b.id));
  });
}

Var linear(Var x, Var weight, Var bias) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  Tape& tape = *x.tape;
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require(xv.rank() == 2 && xv.cols() == wv.rows(),
          "linear: input " + xv.shape_string() + " vs weight " + wv.shape_string());
  require(bv.size() == wv.cols(), "linear: bias " + bv.shape_string() + " vs weight " + wv.shape_string());
  const std::size_t n = xv.rows();
  const std::size_t m = wv.cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t r = 0; r < n; ++r) std::copy(bv.values().begin(), bv.values().end(), out.row(r).begin());
  gemm_rows(xv, wv, out, true);
  return tape.push(std::move(out), tape.any_needs_grad({x, weight, bias}),
                   [x, weight, bias](Tape& t, std::size_t self) {
                     const Tensor& g = t.grad_acc(self);
                     if (t.needs_grad(x)) gemm_rows(g, transpose(t.value(weight)), t.grad_acc(x.id), true);
                     if (t.needs_grad(weight)) accumulate_at_g(t.value(x), g, t.grad_acc(weight.id));
                     if (t.needs_grad(bias)) {
                       Tensor& gb = t.grad_acc(bias.id);
                       for (std::size_t r = 0; r < g.rows(); ++r) {
                         auto gr = g.row(r);
                         for (std::size_t j = 0; j < gr.size(); ++j) gb[j] += gr[j];
                       }
                     }
                   });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.size() == bv.size(), "add: " + av.shape_string() + " vs " + bv.shape_string());
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    if (t.needs_grad(a)) add_into(t.grad_acc(a.id), g);
    if (t.needs_grad(b)) add_into(t.grad_acc(b.id), g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.size() == bv.size(), "sub: " + av.shape_string() + " vs " + bv.shape_string());
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    if (t.needs_grad(a)) add_into(t.grad_acc(a.id), g);
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_acc(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.size() == bv.size(), "mul: " + av.shape_string() + " vs " + bv.shape_string());
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_acc(a.id);
      const Tensor& bv = t.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_acc(b.id);
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a}), [a, s](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    Tensor& ga = t.grad_acc(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * s;
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return x.tape->push(std::move(out), x.tape->any_needs_grad({x}), [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad_acc(x.id);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(out[i]);
  return x.tape->push(std::move(out), x.tape->any_needs_grad({x}), [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_acc(x.id);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return x.tape->push(std::move(out), x.tape->any_needs_grad({x}), [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_acc(x.id);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rows() == bv.rows(), "concat_cols: " + av.shape_string() + " vs " + bv.shape_string());
  const std::size_t n = av.rows();
  const std::size_t ca = av.cols();
  const std::size_t cb = bv.cols();
  Tensor out = Tensor::matrix(n, ca + cb);
  for (std::size_t r = 0; r < n; ++r) {
    auto o = out.row(r);
    std::copy(av.row(r).begin(), av.row(r).end(), o.begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), o.begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a, b}), [a, b, ca, cb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto gr = g.row(r);
      if (t.needs_grad(a)) {
        auto ga = t.grad_acc(a.id).row(r);
        for (std::size_t j = 0; j < ca; ++j) ga[j] += gr[j];
      }
      if (t.needs_grad(b)) {
        auto gb = t.grad_acc(b.id).row(r);
        for (std::size_t j = 0; j < cb; ++j) gb[j] += gr[ca + j];
      }
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require(begin + count <= av.cols(), "slice_cols out of range for " + av.shape_string());
  const std::size_t n = av.rows();
  Tensor out = Tensor::matrix(n, count);
  for (std::size_t r = 0; r < n; ++r) {
    auto src = av.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a}), [a, begin, count](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    Tensor& ga = t.grad_acc(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto dst = ga.row(r).subspan(begin, count);
      auto gr = g.row(r);
      for (std::size_t j = 0; j < count; ++j) dst[j] += gr[j];
    }
  });
}

Var gather_rows(Var a, std::vector<std::size_t> indices) {
  const Tensor& av = a.value();
  const std::size_t m = av.cols();
  Tensor out = Tensor::matrix(indices.size(), m);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    require(indices[r] < av.rows(), "gather_rows: index out of range");
    std::copy(av.row(indices[r]).begin(), av.row(indices[r]).end(), out.row(r).begin());
  }
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a}),
                      [a, idx = std::move(indices)](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad_acc(self);
                        Tensor& ga = t.grad_acc(a.id);
                        for (std::size_t r = 0; r < idx.size(); ++r) {
                          auto dst = ga.row(idx[r]);
                          auto gr = g.row(r);
                          for (std::size_t j = 0; j < gr.size(); ++j) dst[j] += gr[j];
                        }
                      });
}

Var select_rows(const std::vector<Var>& candidates, const std::vector<std::size_t>& choice) {
  if (candidates.empty()) throw EmptySetError("select_rows: no candidates");
  Tape& tape = *candidates.front().tape;
  const Tensor& first = candidates.front().value();
  require(choice.size() == first.rows(), "select_rows: one choice per row required");
  bool needs = false;
  for (const Var& c : candidates) {
    require_same_tape(candidates.front(), c);
    require(c.value().same_shape(first), "select_rows: candidate shapes differ");
    needs = needs || tape.any_needs_grad({c});
  }
  Tensor out(first.shape());
  for (std::size_t r = 0; r < choice.size(); ++r) {
    require(choice[r] < candidates.size(), "select_rows: choice out of range");
    auto src = candidates[choice[r]].value().row(r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return tape.push(std::move(out), needs, [candidates, choice](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    for (std::size_t r = 0; r < choice.size(); ++r) {
      const Var c = candidates[choice[r]];
      if (!t.needs_grad(c)) continue;
      auto dst = t.grad_acc(c.id).row(r);
      auto gr = g.row(r);
      for (std::size_t j = 0; j < gr.size(); ++j) dst[j] += gr[j];
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->push(Tensor({1, 1}, {s}), a.tape->any_needs_grad({a}), [a](Tape& t, std::size_t self) {
    const double g = t.grad_acc(self)[0];
    Tensor& ga = t.grad_acc(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw EmptySetError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
  const Tensor& av = a.value();
  Tensor out = Tensor::matrix(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (double v : av.row(r)) s += v;
    out[r] = s;
  }
  return a.tape->push(std::move(out), a.tape->any_needs_grad({a}), [a](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    Tensor& ga = t.grad_acc(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (double& v : ga.row(r)) v += g[r];
  });
}

PoolResult segment_max(Var x, const std::vector<std::size_t>& offsets, const std::vector<bool>& mask) {
  const Tensor& xv = x.value();
  const std::size_t d = xv.cols();
  if (offsets.size() < 2) throw EmptySetError("segment_max: no segments");
  require(offsets.back() == xv.rows(), "segment_max: offsets do not cover the rows");
  require(mask.empty() || mask.size() == xv.rows(), "segment_max: mask length");
  const std::size_t b = offsets.size() - 1;
  Tensor out = Tensor::matrix(b, d);
  std::vector<std::size_t> argmax(b * d, 0);
  for (std::size_t s = 0; s < b; ++s) {
    auto o = out.row(s);
    std::size_t* am = argmax.data() + s * d;
    bool seen = false;
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      if (!mask.empty() && !mask[r]) continue;
      auto xr = xv.row(r);
      if (!seen) {
        std::copy(xr.begin(), xr.end(), o.begin());
        std::fill(am, am + d, r);
        seen = true;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) {
        if (xr[j] > o[j]) {
          o[j] = xr[j];
          am[j] = r;
        }
      }
    }
    if (!seen) throw EmptySetError("segment_max: segment " + std::to_string(s) + " has no unmasked rows");
  }
  Var pooled = x.tape->push(std::move(out), x.tape->any_needs_grad({x}), [x, argmax, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_acc(self);
    Tensor& gx = t.grad_acc(x.id);
    for (std::size_t i = 0; i < argmax.size(); ++i) gx(argmax[i], i % d) += g[i];
  });
  return PoolResult{pooled, std::move(argmax)};
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormBuffers& buffers, const BatchNormOptions& options) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t d = xv.cols();
  require(gamma.value().size() == d && beta.value().size() == d,
          "batch_norm: affine parameters must have " + std::to_string(d) + " channels");
  if (n == 0) throw EmptySetError("batch_norm over zero rows");
  if (buffers.running_mean.size() != d) buffers.running_mean = Tensor({d}, 0.0);
  if (buffers.running_var.size() != d) buffers.running_var = Tensor({d}, 1.0);

  std::vector<double> mu(d, 0.0);
  std::vector<double> var(d, 0.0);
  if (options.train) {
    for (std::size_t r = 0; r < n; ++r) {
      auto xr = xv.row(r);
      for (std::size_t j = 0; j < d; ++j) mu[j] += xr[j];
    }
    for (double& m : mu) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto xr = xv.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        const double c = xr[j] - mu[j];
        var[j] += c * c;
      }
    }
    for (double& v : var) v /= static_cast<double>(n);
    const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      buffers.running_mean[j] = (1.0 - options.momentum) * buffers.running_mean[j] + options.momentum * mu[j];
      buffers.running_var[j] =
          (1.0 - options.momentum) * buffers.running_var[j] + options.momentum * var[j] * unbias;
    }
  } else {
    for (std::size_t j = 0; j < d; ++j) {
      mu[j] = buffers.running_mean[j];
      var[j] = buffers.running_var[j];
    }
  }

  std::vector<double> inv_std(d);
  for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + options.epsilon);

  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor xhat = Tensor::matrix(n, d);
  Tensor out = Tensor::matrix(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = xv.row(r);
    auto hr = xhat.row(r);
    auto orow = out.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mu[j]) * inv_std[j];
      orow[j] = gv[j] * hr[j] + bv[j];
    }
  }

  const bool train = options.train;
  return x.tape->push(
      std::move(out), x.tape->any_needs_grad({x, gamma, beta}),
      [x, gamma, beta, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_acc(self);
        const std::size_t n = g.rows();
        const std::size_t d = g.cols();
        std::vector<double> sum_g(d, 0.0);
        std::vector<double> sum_gx(d, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
          auto gr = g.row(r);
          auto hr = xhat.row(r);
          for (std::size_t j = 0; j < d; ++j) {
            sum_g[j] += gr[j];
            sum_gx[j] += gr[j] * hr[j];
          }
        }
        if (t.needs_grad(gamma)) {
          Tensor& gg = t.grad_acc(gamma.id);
          for (std::size_t j = 0; j < d; ++j) gg[j] += sum_gx[j];
        }
        if (t.needs_grad(beta)) {
          Tensor& gb = t.grad_acc(beta.id);
          for (std::size_t j = 0; j < d; ++j) gb[j] += sum_g[j];
        }
        if (!t.needs_grad(x)) return;
        const Tensor& gv = t.value(gamma);
        Tensor& gx = t.grad_acc(x.id);
        if (!train) {
          for (std::size_t r = 0; r < n; ++r) {
            auto gr = g.row(r);
            auto dst = gx.row(r);
            for (std::size_t j = 0; j < d; ++j) dst[j] += gr[j] * gv[j] * inv_std[j];
          }
          return;
        }
        // dx = gamma * inv_std / n * (n*g - sum(g) - xhat * sum(g*xhat))
        const double nn = static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          auto gr = g.row(r);
          auto hr = xhat.row(r);
          auto dst = gx.row(r);
          for (std::size_t j = 0; j < d; ++j) {
            dst[j] += gv[j] * inv_std[j] / nn * (nn * gr[j] - sum_g[j] - hr[j] * sum_gx[j]);
          }
        }
      });
}

}  // namespace ust::ad
