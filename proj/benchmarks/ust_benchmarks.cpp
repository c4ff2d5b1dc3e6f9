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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ust/autodiff.hpp"
#include "ust/data_io.hpp"
#include "ust/metrics.hpp"
#include "ust/model.hpp"
#include "ust/training.hpp"

namespace {

using namespace ust;

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.values()) v = u(rng);
  return t;
}

std::vector<Sample> lead_brake_samples(std::size_t n, const ModelConfig& config) {
  data::ScenarioConfig sc;
  sc.kind = data::ScenarioKind::kLeadBrake;
  sc.n_scenes = n;
  return prepare_samples(data::generate_synthetic(sc), config);
}

void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const std::size_t n = 128;
  std::mt19937_64 rng(1);
  const Tensor a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
  Tensor out = Tensor::matrix(m, n);
  for (auto _ : state) {
    ad::gemm_rows(a, b, out, false);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * k * n));
}
BENCHMARK(BM_Gemm)->Args({64, 10})->Args({4096, 10})->Args({4096, 256});

void BM_EncodeBatch(benchmark::State& state) {
  ModelConfig mc;
  Model model(mc, 1);
  const auto samples = lead_brake_samples(static_cast<std::size_t>(state.range(0)), mc);
  std::vector<const Sample*> batch;
  for (const Sample& s : samples) batch.push_back(&s);
  for (auto _ : state) {
    nn::Tape tape(false);
    benchmark::DoNotOptimize(model.encode(tape, batch, Mode::kEval).value().values().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_EncodeBatch)->Arg(1)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  ModelConfig mc;
  mc.stochastic = state.range(1) != 0;
  Model model(mc, 2);
  const auto samples = lead_brake_samples(static_cast<std::size_t>(state.range(0)), mc);
  std::vector<const Sample*> batch;
  for (const Sample& s : samples) batch.push_back(&s);
  TrainConfig tc;
  optim::AdamConfig ac;
  nn::StateRefs refs = model.state();
  optim::AdamState adam = optim::make_adam_state(refs.params, ac);
  std::uint64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(model, batch, tc, adam, step++));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_TrainStep)->Args({128, 0})->Args({128, 1})->Unit(benchmark::kMillisecond);

void BM_MinOverN(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t agents = 1024, samples = 6, steps = 6;
  std::vector<Trajectory> gts(agents);
  std::vector<std::vector<Trajectory>> sets(agents, std::vector<Trajectory>(samples));
  for (std::size_t a = 0; a < agents; ++a) {
    for (std::size_t t = 0; t < steps; ++t) gts[a].push_back({0.5 * double(t + 1), {noise(rng), noise(rng)}});
    for (auto& s : sets[a]) {
      s = gts[a];
      for (auto& o : s) o.pos += Vec2{noise(rng), noise(rng)};
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::mon_metrics(sets, gts).ade);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * agents));
}
BENCHMARK(BM_MinOverN);

}  // namespace
BENCHMARK_MAIN();
