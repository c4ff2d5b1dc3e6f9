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
#include "ust/errors.hpp"
#include "ust/nn.hpp"
#include "ust/optim.hpp"

namespace ust {
namespace {

using ad::Tape;
using ad::Var;
using testing::random_tensor;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Plain-loop LSTM cell: gates in the order input, forget, candidate, output.
void lstm_oracle(const Tensor& x, const Tensor& h, const Tensor& c, const nn::LstmCell& cell, Tensor& h_out,
                 Tensor& c_out) {
  const std::size_t hs = cell.hidden_size();
  h_out = Tensor({x.rows(), hs});
  c_out = Tensor({x.rows(), hs});
  for (std::size_t b = 0; b < x.rows(); ++b) {
    for (std::size_t j = 0; j < hs; ++j) {
      double z[4];
      for (std::size_t g = 0; g < 4; ++g) {
        const std::size_t col = g * hs + j;
        double s = cell.bias.value[col];
        for (std::size_t i = 0; i < x.cols(); ++i) s += x(b, i) * cell.w_input.value(i, col);
        for (std::size_t i = 0; i < hs; ++i) s += h(b, i) * cell.w_hidden.value(i, col);
        z[g] = s;
      }
      const double cn = sigmoid(z[1]) * c(b, j) + sigmoid(z[0]) * std::tanh(z[2]);
      c_out(b, j) = cn;
      h_out(b, j) = sigmoid(z[3]) * std::tanh(cn);
    }
  }
}

TEST(LstmCell, ZeroEverythingGivesZeroState) {
  nn::Rng rng(1);
  nn::LstmCell cell("cell", 3, 4, rng);
  nn::StateRefs refs;
  cell.collect(refs);
  nn::zero_all(refs);
  Tape tape;
  auto [h, c] = cell.step(tape, tape.constant(Tensor::matrix(2, 3)), tape.constant(Tensor::matrix(2, 4)),
                          tape.constant(Tensor::matrix(2, 4)));
  for (double v : h.value().values()) EXPECT_EQ(v, 0.0);
  for (double v : c.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(LstmCell, SaturatedForgetGateKeepsCell) {
  nn::Rng rng(2);
  nn::LstmCell cell("cell", 2, 3, rng);
  nn::StateRefs refs;
  cell.collect(refs);
  nn::zero_all(refs);
  for (std::size_t j = 0; j < 3; ++j) cell.bias.value[3 + j] = 50.0;
  std::mt19937_64 gen(3);
  Tensor c0 = random_tensor({1, 3}, gen);
  Tape tape;
  auto [h, c] = cell.step(tape, tape.constant(random_tensor({1, 2}, gen)), tape.constant(random_tensor({1, 3}, gen)),
                          tape.constant(c0));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(c.value()[j], c0[j], 1e-12);
}

TEST(LstmCell, MatchesGateFormulaOracle) {
  nn::Rng rng(4);
  nn::LstmCell cell("cell", 3, 5, rng);
  std::mt19937_64 gen(5);
  Tensor x = random_tensor({4, 3}, gen), h = random_tensor({4, 5}, gen), c = random_tensor({4, 5}, gen);
  Tape tape;
  auto [hv, cv] = cell.step(tape, tape.constant(x), tape.constant(h), tape.constant(c));
  Tensor h_ref, c_ref;
  lstm_oracle(x, h, c, cell, h_ref, c_ref);
  for (std::size_t i = 0; i < h_ref.size(); ++i) {
    EXPECT_NEAR(hv.value()[i], h_ref[i], 1e-14);
    EXPECT_NEAR(cv.value()[i], c_ref[i], 1e-14);
  }
}

TEST(LstmCell, ShapeMismatchIsDimensionError) {
  nn::Rng rng(6);
  nn::LstmCell cell("cell", 2, 3, rng);
  Tape tape;
  EXPECT_THROW(cell.step(tape, tape.constant(Tensor::matrix(1, 3)), tape.constant(Tensor::matrix(1, 3)),
                         tape.constant(Tensor::matrix(1, 3))),
               DimensionError);
}

TEST(LstmCell, GradientsPassFiniteDifferences) {
  nn::Rng rng(7);
  nn::LstmCell cell("cell", 2, 3, rng);
  std::mt19937_64 gen(8);
  auto r = testing::check_gradients(
      [&](Tape& tape, std::vector<Var>& v) {
        auto [h1, c1] = cell.step(tape, v[0], v[1], v[2]);
        auto [h2, c2] = cell.step(tape, v[0], h1, c1);
        return ad::concat_cols(h2, c2);
      },
      {random_tensor({2, 2}, gen), random_tensor({2, 3}, gen), random_tensor({2, 3}, gen)}, 9);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST(BatchNorm, ConstantChannelGivesBeta) {
  nn::BatchNorm bn("bn", 3);
  bn.beta.value = Tensor::vector({0.5, -1.0, 2.0});
  Tensor x({6, 3});
  for (std::size_t r = 0; r < 6; ++r) {
    x(r, 0) = 4.0;
    x(r, 1) = -7.0;
    x(r, 2) = 0.25;
  }
  Tape tape;
  const Tensor y = bn(tape, tape.constant(x), true).value();
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y(r, c), bn.beta.value[c], 1e-6);
}

TEST(BatchNorm, TrainModeNormalizesChannels) {
  std::mt19937_64 gen(10);
  for (std::size_t m : {8u, 13u, 64u}) {
    nn::BatchNorm bn("bn", 4);
    Tensor x = random_tensor({m, 4}, gen, -5.0, 9.0);
    Tape tape;
    const Tensor y = bn(tape, tape.constant(x), true).value();
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0.0, var = 0.0;
      for (std::size_t r = 0; r < m; ++r) mean += y(r, c);
      mean /= double(m);
      for (std::size_t r = 0; r < m; ++r) var += (y(r, c) - mean) * (y(r, c) - mean);
      var /= double(m);
      EXPECT_LE(std::abs(mean), 1e-6);
      EXPECT_NEAR(var, 1.0, 1e-4);
    }
  }
}

TEST(BatchNorm, EvalModeWithUnitStatsIsNearIdentity) {
  std::mt19937_64 gen(11);
  nn::BatchNorm bn("bn", 5);
  Tensor x = random_tensor({3, 5}, gen);
  Tape tape;
  const Tensor y = bn(tape, tape.constant(x), false).value();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-5 * std::abs(x[i]) + 1e-12);
}

TEST(BatchNorm, RunningStatsFollowMomentum) {
  nn::BatchNorm bn("bn", 1);
  Tensor x = Tensor::from_rows({{1.0}, {2.0}, {3.0}, {6.0}});
  Tape tape;
  bn(tape, tape.constant(x), true);
  // batch mean 3, unbiased variance 14/3
  EXPECT_NEAR(bn.buffers.running_mean[0], 0.1 * 3.0, 1e-15);
  EXPECT_NEAR(bn.buffers.running_var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-15);
  bn(tape, tape.constant(x), false);
  EXPECT_NEAR(bn.buffers.running_mean[0], 0.3, 1e-15);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ad::Parameter p("w", Tensor::vector({1.0, -2.0, 0.5, 3.0}));
  p.grad = Tensor::vector({0.3, -4.0, 1e-3, 7.0});
  std::vector<ad::Parameter*> params{&p};
  optim::AdamConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.0;
  auto state = optim::make_adam_state(params, cfg);
  const Tensor before = p.value;
  optim::adam_step(params, state);
  EXPECT_EQ(state.step_count, 1u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(std::abs(p.value[i] - before[i]) - cfg.lr), cfg.lr * 1e-3);
}

TEST(Adam, ZeroGradientWithoutDecayIsIdentity) {
  std::mt19937_64 gen(12);
  ad::Parameter p("w", random_tensor({3, 3}, gen));
  std::vector<ad::Parameter*> params{&p};
  optim::AdamConfig cfg;
  cfg.weight_decay = 0.0;
  auto state = optim::make_adam_state(params, cfg);
  const Tensor before = p.value;
  for (int i = 0; i < 5; ++i) optim::adam_step(params, state);
  EXPECT_EQ(state.step_count, 5u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(p.value[i], before[i]);
}

TEST(Adam, ThreeStepsOnSquareMatchReferenceTrace) {
  ad::Parameter p("w", Tensor::vector({1.0}));
  std::vector<ad::Parameter*> params{&p};
  optim::AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  auto state = optim::make_adam_state(params, cfg);
  const double expected[3] = {0.9000000005, 0.8004122286917928, 0.7015862729460303};
  for (double want : expected) {
    p.zero_grad();
    Tape tape;
    Var w = tape.parameter(p);
    tape.backward(ad::sum(ad::mul(w, w)));
    optim::adam_step(params, state);
    EXPECT_NEAR(p.value[0], want, 1e-15);
  }
}

TEST(Adam, CoupledWeightDecayActsAsGradient) {
  ad::Parameter a("a", Tensor::vector({2.0}));
  ad::Parameter b("b", Tensor::vector({2.0}));
  a.grad[0] = 0.0;
  b.grad[0] = 0.5 * 2.0;
  optim::AdamConfig with_decay;
  with_decay.weight_decay = 0.5;
  optim::AdamConfig plain;
  plain.weight_decay = 0.0;
  std::vector<ad::Parameter*> pa{&a}, pb{&b};
  auto sa = optim::make_adam_state(pa, with_decay);
  auto sb = optim::make_adam_state(pb, plain);
  optim::adam_step(pa, sa);
  optim::adam_step(pb, sb);
  EXPECT_EQ(a.value[0], b.value[0]);
}

TEST(Adam, InvalidConfigIsConfigError) {
  ad::Parameter p("w", Tensor::vector({1.0}));
  std::vector<ad::Parameter*> params{&p};
  optim::AdamConfig cfg;
  cfg.lr = 0.0;
  EXPECT_THROW(optim::make_adam_state(params, cfg), ConfigError);
}

}  // namespace
}  // namespace ust
