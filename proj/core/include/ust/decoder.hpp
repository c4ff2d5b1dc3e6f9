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
#include <cstdint>
#include <span>
#include <vector>

#include "ust/nn.hpp"
#include "ust/types.hpp"

namespace ust {

struct DecoderConfig {
  std::size_t context_width = 128;
  std::size_t hidden = 128;
  std::size_t future_steps = 6;
  double dt = 0.5;
  std::size_t noise_dim = 0;  // > 0 enables stochastic decoding
  double noise_sigma = 1.0;
};

/// init projection [context (+ noise)] -> (h0, c0); LSTM cell fed with the previous
/// displacement; linear head H -> 2 emitting the next displacement.
struct DecoderParams {
  DecoderConfig config;
  nn::Linear init_projection;  // (context_width + noise_dim) -> 2H
  nn::LstmCell cell;           // input 2
  nn::Linear head;             // H -> 2

  DecoderParams() = default;
  DecoderParams(const DecoderConfig& config, nn::Rng& rng);
  bool stochastic() const { return config.noise_dim > 0; }
  void collect(nn::StateRefs& refs);
};

struct Rollout {
  std::vector<nn::Var> displacements;  // T_f x [B x 2]
  std::vector<nn::Var> positions;      // T_f x [B x 2], cumulative from the origin
};

/// Batched rollout from contexts [B x context_width]. For stochastic decoders `noise`
/// ([B x noise_dim]) is appended to the context; an invalid Var means zero noise.
Rollout decode_batch(nn::Tape& tape, nn::Var context, DecoderParams& params, nn::Var noise = {});

/// Row b of the rollout as a trajectory at times dt, 2dt, ...
Trajectory rollout_row(const Rollout& rollout, std::size_t b, double dt);

Trajectory decode_deterministic(const Tensor& context, DecoderParams& params);

/// N rollouts with z ~ N(0, sigma^2 I) drawn once per rollout from `seed`.
std::vector<Trajectory> decode_stochastic(const Tensor& context, DecoderParams& params, std::size_t n_samples,
                                          std::uint64_t seed);

/// Draws a [rows x noise_dim] Gaussian block.
Tensor sample_noise(std::size_t rows, const DecoderConfig& config, nn::Rng& rng);

/// type_weight * mean over steps of squared Euclidean error.
double l2_loss(const Trajectory& pred, const Trajectory& gt, double type_weight = 1.0);

/// Minimum l2_loss (weight 1) over samples.
double variety_loss(std::span<const Trajectory> samples, const Trajectory& gt);

/// Per-row weighted l2 loss on the tape: [B x 1]. `gt` is [B x 2T] (x1, y1, x2, ...).
nn::Var l2_loss_rows(nn::Tape& tape, const Rollout& rollout, const Tensor& gt, std::span<const double> weights);

}  // namespace ust
