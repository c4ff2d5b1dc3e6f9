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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ust/checkpoint.hpp"
#include "ust/metrics.hpp"
#include "ust/model.hpp"
#include "ust/optim.hpp"

namespace ust {

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t epochs = 50;
  double lr = 3e-4;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  /// Loss weight per agent type, indexed by AgentType.
  std::array<double, kAgentTypeCount> type_weights{1.0, 2.0, 1.0, 1.0};
  std::size_t variety_samples = 6;  // rollouts per sample for stochastic decoders
  double augment_dropout = 0.0;     // per-epoch neighbor observation dropout on training scenes
  std::size_t max_steps = 0;        // 0: no limit
  double val_fraction = 0.2;        // CSV data only
  std::size_t val_scenes = 128;     // synthetic data only

  void validate() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_map() const;
};

struct EvalConfig {
  std::size_t mon_n = 6;
  std::vector<double> horizons;
  bool joint_selection = false;
  std::uint64_t seed = 0;

  static EvalConfig from_map(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_map() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;
  std::optional<double> val_ade;
  std::optional<double> val_fde;
};

struct TrainResult {
  std::vector<EpochLog> log;
  Checkpoint best;
  Checkpoint final;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
};

/// Seeded mini-batch training with Adam. Validation ADE/FDE after every epoch picks
/// the best checkpoint (the last one without validation data). A non-finite loss or
/// gradient aborts with NumericError naming the step, learning rate and gradient norm.
TrainResult train(Model& model, std::span<const Scene> train_scenes, std::span<const Scene> val_scenes,
                  const TrainConfig& config, std::ostream* progress = nullptr);

/// One optimisation step on a prepared batch; returns the batch loss.
double train_step(Model& model, std::span<const Sample* const> batch, const TrainConfig& config,
                  optim::AdamState& adam, std::uint64_t step_seed);

struct Evaluation {
  metrics::MetricReport report;
  std::vector<Trajectory> predictions;  // target frame
};

/// Deterministic predictions and the full report; stochastic models additionally get
/// minimum-over-N metrics from `mon_n` seeded samples.
Evaluation evaluate(Model& model, std::span<const Sample> samples, const EvalConfig& config = {});

std::string log_to_csv(std::span<const EpochLog> log);

}  // namespace ust
