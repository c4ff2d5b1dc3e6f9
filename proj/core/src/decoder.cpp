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

#include "ust/decoder.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <tuple>

#include "ust/errors.hpp"

namespace ust {

DecoderParams::DecoderParams(const DecoderConfig& cfg, nn::Rng& rng)
    : config(cfg),
      init_projection("decoder.init", cfg.context_width + cfg.noise_dim, 2 * cfg.hidden, rng),
      cell("decoder.cell", 2, cfg.hidden, rng),
      head("decoder.head", cfg.hidden, 2, rng) {
  if (cfg.future_steps == 0) throw ConfigError("decoder future_steps must be >= 1");
  if (cfg.noise_sigma < 0.0) throw ConfigError("decoder noise_sigma must be >= 0");
}

void DecoderParams::collect(nn::StateRefs& refs) {
  init_projection.collect(refs);
  cell.collect(refs);
  head.collect(refs);
}

Rollout decode_batch(nn::Tape& tape, nn::Var context, DecoderParams& params, nn::Var noise) {
  const DecoderConfig& cfg = params.config;
  const std::size_t b = context.value().rows();
  if (context.value().cols() != cfg.context_width) {
    throw DimensionError("decoder expects context width " + std::to_string(cfg.context_width) + ", got " +
                         context.value().shape_string());
  }
  nn::Var input = context;
  if (cfg.noise_dim > 0) {
    if (!noise.valid()) noise = tape.constant(Tensor::matrix(b, cfg.noise_dim));
    if (noise.value().rows() != b || noise.value().cols() != cfg.noise_dim) {
      throw DimensionError("decoder noise must be [" + std::to_string(b) + " x " + std::to_string(cfg.noise_dim) + "]");
    }
    input = ad::concat_cols(context, noise);
  }
  nn::Var init = params.init_projection(tape, input);
  nn::Var h = ad::slice_cols(init, 0, cfg.hidden);
  nn::Var c = ad::slice_cols(init, cfg.hidden, cfg.hidden);
  nn::Var step_input = tape.constant(Tensor::matrix(b, 2));
  nn::Var position = tape.constant(Tensor::matrix(b, 2));

  Rollout out;
  out.displacements.reserve(cfg.future_steps);
  out.positions.reserve(cfg.future_steps);
  for (std::size_t k = 0; k < cfg.future_steps; ++k) {
    std::tie(h, c) = params.cell.step(tape, step_input, h, c);
    nn::Var d = params.head(tape, h);
    position = ad::add(position, d);
    out.displacements.push_back(d);
    out.positions.push_back(position);
    step_input = d;
  }
  return out;
}

Trajectory rollout_row(const Rollout& rollout, std::size_t b, double dt) {
  Trajectory t;
  t.reserve(rollout.positions.size());
  for (std::size_t k = 0; k < rollout.positions.size(); ++k) {
    const Tensor& p = rollout.positions[k].value();
    t.push_back({dt * static_cast<double>(k + 1), {p(b, 0), p(b, 1)}});
  }
  return t;
}

Tensor sample_noise(std::size_t rows, const DecoderConfig& config, nn::Rng& rng) {
  Tensor z = Tensor::matrix(rows, config.noise_dim);
  if (config.noise_sigma > 0.0) {
    std::normal_distribution<double> dist(0.0, config.noise_sigma);
    for (double& v : z.values()) v = dist(rng);
  }
  return z;
}

namespace {

Tensor as_row(const Tensor& context) {
  return Tensor({1, context.size()}, std::vector<double>(context.values().begin(), context.values().end()));
}

}  // namespace

Trajectory decode_deterministic(const Tensor& context, DecoderParams& params) {
  nn::Tape tape(false);
  Rollout r = decode_batch(tape, tape.constant(as_row(context)), params);
  return rollout_row(r, 0, params.config.dt);
}

std::vector<Trajectory> decode_stochastic(const Tensor& context, DecoderParams& params, std::size_t n_samples,
                                          std::uint64_t seed) {
  if (!params.stochastic()) throw ConfigError("decode_stochastic requires noise_dim > 0");
  if (n_samples == 0) throw ConfigError("decode_stochastic requires at least one sample");
  nn::Rng rng(seed);
  nn::Tape tape(false);
  Tensor ctx = Tensor::matrix(n_samples, context.size());
  for (std::size_t n = 0; n < n_samples; ++n) std::copy(context.values().begin(), context.values().end(), ctx.row(n).begin());
  nn::Var noise = tape.constant(sample_noise(n_samples, params.config, rng));
  Rollout r = decode_batch(tape, tape.constant(std::move(ctx)), params, noise);
  std::vector<Trajectory> out;
  out.reserve(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) out.push_back(rollout_row(r, n, params.config.dt));
  return out;
}

double l2_loss(const Trajectory& pred, const Trajectory& gt, double type_weight) {
  if (pred.size() != gt.size()) {
    throw DimensionError("l2_loss: prediction has " + std::to_string(pred.size()) + " steps, ground truth " +
                         std::to_string(gt.size()));
  }
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) s += (pred[k].pos - gt[k].pos).squared_norm();
  return type_weight * s / static_cast<double>(pred.size());
}

double variety_loss(std::span<const Trajectory> samples, const Trajectory& gt) {
  if (samples.empty()) throw EmptySetError("variety_loss: no samples");
  double best = std::numeric_limits<double>::infinity();
  for (const Trajectory& s : samples) best = std::min(best, l2_loss(s, gt, 1.0));
  return best;
}

nn::Var l2_loss_rows(nn::Tape& tape, const Rollout& rollout, const Tensor& gt, std::span<const double> weights) {
  const std::size_t steps = rollout.positions.size();
  if (steps == 0) throw EmptySetError("l2_loss_rows: empty rollout");
  const std::size_t b = rollout.positions.front().value().rows();
  if (gt.rows() != b || gt.cols() != 2 * steps || weights.size() != b) {
    throw DimensionError("l2_loss_rows: ground truth " + gt.shape_string() + " for " + std::to_string(b) +
                         " rows and " + std::to_string(steps) + " steps");
  }
  nn::Var total;
  for (std::size_t k = 0; k < steps; ++k) {
    Tensor target = Tensor::matrix(b, 2);
    for (std::size_t r = 0; r < b; ++r) {
      target(r, 0) = gt(r, 2 * k);
      target(r, 1) = gt(r, 2 * k + 1);
    }
    nn::Var diff = ad::sub(rollout.positions[k], tape.constant(std::move(target)));
    nn::Var sq = ad::row_sum(ad::mul(diff, diff));
    total = total.valid() ? ad::add(total, sq) : sq;
  }
  Tensor w = Tensor::matrix(b, 1);
  for (std::size_t r = 0; r < b; ++r) w[r] = weights[r] / static_cast<double>(steps);
  return ad::mul(total, tape.constant(std::move(w)));
}

}  // namespace ust
