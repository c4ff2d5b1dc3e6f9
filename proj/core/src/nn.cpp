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

#include "ust/nn.hpp"

#include <cmath>

#include "ust/errors.hpp"

namespace ust::nn {

namespace {

Tensor uniform(std::vector<std::size_t> shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = Parameter(name + ".weight", uniform({in, out}, bound, rng));
  bias = Parameter(name + ".bias", uniform({out}, bound, rng));
}

Var Linear::operator()(Tape& tape, Var x) {
  return ad::linear(x, tape.parameter(weight), tape.parameter(bias));
}

void Linear::collect(StateRefs& refs) {
  refs.params.push_back(&weight);
  refs.params.push_back(&bias);
}

BatchNorm::BatchNorm(const std::string& n, std::size_t channels)
    : name(n),
      gamma(n + ".gamma", Tensor({channels}, 1.0)),
      beta(n + ".beta", Tensor({channels}, 0.0)),
      buffers{Tensor({channels}, 0.0), Tensor({channels}, 1.0)} {}

Var BatchNorm::operator()(Tape& tape, Var x, bool train) {
  ad::BatchNormOptions opts;
  opts.train = train;
  return ad::batch_norm(x, tape.parameter(gamma), tape.parameter(beta), buffers, opts);
}

void BatchNorm::collect(StateRefs& refs) {
  refs.params.push_back(&gamma);
  refs.params.push_back(&beta);
  refs.buffers.emplace_back(name + ".running_mean", &buffers.running_mean);
  refs.buffers.emplace_back(name + ".running_var", &buffers.running_var);
}

LstmCell::LstmCell(const std::string& name, std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  w_input = Parameter(name + ".w_input", uniform({input_size, 4 * hidden_size}, bound, rng));
  w_hidden = Parameter(name + ".w_hidden", uniform({hidden_size, 4 * hidden_size}, bound, rng));
  bias = Parameter(name + ".bias", uniform({4 * hidden_size}, bound, rng));
}

std::pair<Var, Var> LstmCell::step(Tape& tape, Var x, Var h, Var c) {
  const std::size_t hs = hidden_size();
  if (x.value().cols() != input_size() || h.value().cols() != hs || c.value().cols() != hs) {
    throw DimensionError("lstm step: input " + x.value().shape_string() + ", state " +
                         h.value().shape_string() + " for cell " + w_input.value.shape_string());
  }
  Var z = ad::add(ad::linear(x, tape.parameter(w_input), tape.parameter(bias)),
                  ad::matmul(h, tape.parameter(w_hidden)));
  Var in_gate = ad::sigmoid(ad::slice_cols(z, 0, hs));
  Var forget_gate = ad::sigmoid(ad::slice_cols(z, hs, hs));
  Var candidate = ad::tanh(ad::slice_cols(z, 2 * hs, hs));
  Var out_gate = ad::sigmoid(ad::slice_cols(z, 3 * hs, hs));
  Var c_next = ad::add(ad::mul(forget_gate, c), ad::mul(in_gate, candidate));
  Var h_next = ad::mul(out_gate, ad::tanh(c_next));
  return {h_next, c_next};
}

void LstmCell::collect(StateRefs& refs) {
  refs.params.push_back(&w_input);
  refs.params.push_back(&w_hidden);
  refs.params.push_back(&bias);
}

void zero_all(StateRefs& refs) {
  for (Parameter* p : refs.params) p->value.fill(0.0);
  for (auto& [name, t] : refs.buffers) {
    const bool is_var = name.size() >= 4 && name.compare(name.size() - 4, 4, "_var") == 0;
    t->fill(is_var ? 1.0 : 0.0);
  }
}

void zero_grads(const StateRefs& refs) {
  for (Parameter* p : refs.params) p->zero_grad();
}

}  // namespace ust::nn
