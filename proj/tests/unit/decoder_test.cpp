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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "ust/data_io.hpp"
#include "ust/decoder.hpp"
#include "ust/errors.hpp"
#include "ust/model.hpp"

namespace ust {
namespace {

using testing::random_tensor;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Trajectory offset(const Trajectory& t, Vec2 d) {
  Trajectory out = t;
  for (auto& o : out) o.pos += d;
  return out;
}

Trajectory line(std::size_t n) {
  Trajectory t;
  for (std::size_t k = 1; k <= n; ++k) t.push_back({0.5 * double(k), {double(k), 0.3 * double(k)}});
  return t;
}

TEST(Decoder, ZeroWeightsStayAtOrigin) {
  nn::Rng rng(1);
  DecoderParams params({8, 8, 6, 0.5, 0, 1.0}, rng);
  nn::StateRefs refs;
  params.collect(refs);
  nn::zero_all(refs);
  std::mt19937_64 gen(2);
  const Trajectory t = decode_deterministic(random_tensor({8}, gen), params);
  ASSERT_EQ(t.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(t[k].pos.x, 0.0);
    EXPECT_EQ(t[k].pos.y, 0.0);
    EXPECT_DOUBLE_EQ(t[k].t, 0.5 * double(k + 1));
  }
}

TEST(Decoder, LengthIsHorizon) {
  nn::Rng rng(3);
  std::mt19937_64 gen(4);
  for (std::size_t steps : {1u, 6u, 25u}) {
    DecoderParams params({5, 7, steps, 0.2, 0, 1.0}, rng);
    EXPECT_EQ(decode_deterministic(random_tensor({5}, gen, -5, 5), params).size(), steps);
  }
}

TEST(Decoder, MatchesStepByStepOracle) {
  nn::Rng rng(5);
  DecoderParams params({6, 4, 5, 0.5, 0, 1.0}, rng);
  std::mt19937_64 gen(6);
  const Tensor ctx = random_tensor({6}, gen);
  const Trajectory t = decode_deterministic(ctx, params);

  const std::size_t hs = 4;
  std::vector<double> init(2 * hs);
  for (std::size_t j = 0; j < 2 * hs; ++j) {
    double s = params.init_projection.bias.value[j];
    for (std::size_t i = 0; i < 6; ++i) s += ctx[i] * params.init_projection.weight.value(i, j);
    init[j] = s;
  }
  std::vector<double> h(init.begin(), init.begin() + hs), c(init.begin() + hs, init.end());
  double in[2] = {0.0, 0.0}, pos[2] = {0.0, 0.0};
  const auto& cell = params.cell;
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<double> hn(hs), cn(hs);
    for (std::size_t j = 0; j < hs; ++j) {
      double z[4];
      for (std::size_t g = 0; g < 4; ++g) {
        const std::size_t col = g * hs + j;
        double s = cell.bias.value[col] + in[0] * cell.w_input.value(0, col) + in[1] * cell.w_input.value(1, col);
        for (std::size_t i = 0; i < hs; ++i) s += h[i] * cell.w_hidden.value(i, col);
        z[g] = s;
      }
      cn[j] = sigmoid(z[1]) * c[j] + sigmoid(z[0]) * std::tanh(z[2]);
      hn[j] = sigmoid(z[3]) * std::tanh(cn[j]);
    }
    h = hn;
    c = cn;
    for (std::size_t o = 0; o < 2; ++o) {
      double d = params.head.bias.value[o];
      for (std::size_t i = 0; i < hs; ++i) d += h[i] * params.head.weight.value(i, o);
      in[o] = d;
      pos[o] += d;
    }
    EXPECT_NEAR(t[k].pos.x, pos[0], 1e-13);
    EXPECT_NEAR(t[k].pos.y, pos[1], 1e-13);
  }
}

TEST(Decoder, PureAndCumulative) {
  nn::Rng rng(7);
  DecoderParams params({8, 8, 6, 0.5, 0, 1.0}, rng);
  std::mt19937_64 gen(8);
  const Tensor ctx = random_tensor({1, 8}, gen);
  nn::Tape tape(false);
  const Rollout r = decode_batch(tape, tape.constant(ctx), params);
  double x = 0.0, y = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    x += r.displacements[k].value()[0];
    y += r.displacements[k].value()[1];
    EXPECT_EQ(r.positions[k].value()[0], x);
    EXPECT_EQ(r.positions[k].value()[1], y);
  }
  const Tensor flat({8}, std::vector<double>(ctx.values().begin(), ctx.values().end()));
  const Trajectory a = decode_deterministic(flat, params), b = decode_deterministic(flat, params);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(a[k].pos, b[k].pos);
}

TEST(StochasticDecoder, ZeroSigmaGivesIdenticalSamples) {
  nn::Rng rng(9);
  DecoderParams params({8, 8, 6, 0.5, 4, 0.0}, rng);
  std::mt19937_64 gen(10);
  const auto samples = decode_stochastic(random_tensor({8}, gen), params, 6, 77);
  ASSERT_EQ(samples.size(), 6u);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(s[k].pos, samples[0][k].pos);
}

TEST(StochasticDecoder, SeededAndDiverse) {
  nn::Rng rng(11);
  DecoderParams params({8, 8, 6, 0.5, 16, 1.0}, rng);
  std::mt19937_64 gen(12);
  const Tensor ctx = random_tensor({8}, gen);
  const auto a = decode_stochastic(ctx, params, 6, 5);
  const auto b = decode_stochastic(ctx, params, 6, 5);
  const auto c = decode_stochastic(ctx, params, 6, 6);
  for (std::size_t n = 0; n < 6; ++n)
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(a[n][k].pos, b[n][k].pos);
  EXPECT_NE(a[0].back().pos, a[1].back().pos);
  EXPECT_NE(a[0].back().pos, c[0].back().pos);
}

TEST(StochasticDecoder, DeterministicConfigIsConfigError) {
  nn::Rng rng(13);
  DecoderParams params({8, 8, 6, 0.5, 0, 1.0}, rng);
  EXPECT_THROW(decode_stochastic(Tensor({8}, 0.0), params, 6, 1), ConfigError);
}

TEST(L2Loss, Examples) {
  const Trajectory gt = line(6);
  EXPECT_EQ(l2_loss(gt, gt), 0.0);
  EXPECT_DOUBLE_EQ(l2_loss(offset(gt, {3, 4}), gt), 25.0);
  const Trajectory p = offset(gt, {0.3, -1.1});
  EXPECT_DOUBLE_EQ(l2_loss(p, gt, 2.0), 2.0 * l2_loss(p, gt, 1.0));
  EXPECT_THROW(l2_loss(line(5), gt), DimensionError);
}

TEST(VarietyLoss, Examples) {
  const Trajectory gt = line(4);
  const std::vector<Trajectory> with_gt{offset(gt, {1, 1}), gt};
  EXPECT_EQ(variety_loss(with_gt, gt), 0.0);
  const Trajectory p = offset(gt, {0.5, 2.0});
  const std::vector<Trajectory> same{p, p, p};
  EXPECT_EQ(variety_loss(same, gt), l2_loss(p, gt));
  const std::vector<Trajectory> three{offset(gt, {2, 0}), offset(gt, {0, 1}), offset(gt, {3, 0})};
  EXPECT_DOUBLE_EQ(variety_loss(three, gt), 1.0);
  EXPECT_THROW(variety_loss(std::span<const Trajectory>{}, gt), EmptySetError);
}

TEST(VarietyLoss, BoundedByEverySample) {
  std::mt19937_64 gen(14);
  std::normal_distribution<double> n(0.0, 1.0);
  const Trajectory gt = line(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Trajectory> samples;
    for (int s = 0; s < 6; ++s) samples.push_back(offset(gt, {n(gen), n(gen)}));
    const double v = variety_loss(samples, gt);
    for (const auto& s : samples) EXPECT_LE(v, l2_loss(s, gt));
  }
}

TEST(L2LossRows, MatchesScalarLoss) {
  nn::Rng rng(15);
  DecoderParams params({5, 6, 4, 0.5, 0, 1.0}, rng);
  std::mt19937_64 gen(16);
  const Tensor ctx = random_tensor({3, 5}, gen);
  const Tensor gt = random_tensor({3, 8}, gen);
  const std::vector<double> weights{1.0, 2.0, 0.5};
  nn::Tape tape(false);
  const Rollout r = decode_batch(tape, tape.constant(ctx), params);
  const Tensor rows = l2_loss_rows(tape, r, gt, weights).value();
  for (std::size_t b = 0; b < 3; ++b) {
    Trajectory truth;
    for (std::size_t k = 0; k < 4; ++k) truth.push_back({0.5 * double(k + 1), {gt(b, 2 * k), gt(b, 2 * k + 1)}});
    EXPECT_NEAR(rows[b], l2_loss(rollout_row(r, b, 0.5), truth, weights[b]), 1e-12);
  }
}

TEST(Pipeline, EndToEndGradientSpotCheck) {
  data::ScenarioConfig sc;
  sc.kind = data::ScenarioKind::kLeadBrake;
  sc.n_scenes = 6;
  sc.seed = 3;
  const auto scenes = data::generate_synthetic(sc);
  for (bool stochastic : {false, true}) {
    ModelConfig mc;
    mc.hidden = 8;
    mc.stochastic = stochastic;
    mc.noise_dim = 3;
    Model model(mc, 17);
    const auto samples = prepare_samples(scenes, mc);
    std::vector<const Sample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    Tensor gt = Tensor::matrix(batch.size(), 12);
    for (std::size_t b = 0; b < batch.size(); ++b)
      for (std::size_t i = 0; i < 12; ++i) gt(b, i) = batch[b]->future[i];
    std::mt19937_64 gen(18);
    const Tensor noise = random_tensor({batch.size(), 3}, gen);
    const std::vector<double> weights(batch.size(), 1.0);
    auto r = testing::spot_check_parameters(
        model.parameters(),
        [&](nn::Tape& tape) {
          nn::Var ctx = model.encode(tape, batch, Mode::kTrain);
          Rollout roll = model.decode(tape, ctx, stochastic ? tape.constant(noise) : nn::Var{});
          return ad::mean(l2_loss_rows(tape, roll, gt, weights));
        },
        20, 19, 1e-3);
    EXPECT_EQ(r.checked, 20u);
    EXPECT_EQ(r.failures, 0u) << r.worst;
  }
}

}  // namespace
}  // namespace ust
