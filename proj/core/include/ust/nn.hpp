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

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ust/autodiff.hpp"

namespace ust::nn {

using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Non-owning view of everything a model persists: trainable parameters plus
/// named buffers (batch-norm running statistics).
struct StateRefs {
  std::vector<Parameter*> params;
  std::vector<std::pair<std::string, Tensor*>> buffers;
};

using Rng = std::mt19937_64;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight and bias.
struct Linear {
  Parameter weight;  // [in x out]
  Parameter bias;    // [out]

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  std::size_t in_features() const { return weight.value.rows(); }
  std::size_t out_features() const { return weight.value.cols(); }
  Var operator()(Tape& tape, Var x);
  void collect(StateRefs& refs);
};

struct BatchNorm {
  std::string name;
  Parameter gamma;
  Parameter beta;
  ad::BatchNormBuffers buffers;

  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t channels);

  Var operator()(Tape& tape, Var x, bool train);
  void collect(StateRefs& refs);
};

/// Gate order in the fused [*, 4H] matrices: input, forget, candidate, output.
struct LstmCell {
  Parameter w_input;   // [in x 4H]
  Parameter w_hidden;  // [H x 4H]
  Parameter bias;      // [4H]

  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t input_size, std::size_t hidden_size, Rng& rng);

  std::size_t input_size() const { return w_input.value.rows(); }
  std::size_t hidden_size() const { return w_hidden.value.rows(); }

  /// One step on a batch: x [B x in], h/c [B x H] -> (h', c').
  std::pair<Var, Var> step(Tape& tape, Var x, Var h, Var c);
  void collect(StateRefs& refs);
};

/// Sets every parameter and buffer to zero (running variance stays one).
void zero_all(StateRefs& refs);
void zero_grads(const StateRefs& refs);

}  // namespace ust::nn
