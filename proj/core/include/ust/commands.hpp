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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ust/data_io.hpp"
#include "ust/kv.hpp"
#include "ust/model.hpp"
#include "ust/training.hpp"

namespace ust::app {

enum class EvalSplit { kVal, kAll };

/// Grid and channel selection for the activation analysis.
struct ActivationConfig {
  std::vector<std::size_t> channels{0, 1};
  double x1_min = -90.0, x1_max = 90.0, x1_step = 5.0;
  double x2_min = -15.0, x2_max = 15.0, x2_step = 1.0;
  double t_min = -3.0, t_max = 0.0, t_step = 0.5;
};

/// Everything a command needs, read from flat keys with prefixes
/// model., train., eval., scenario., window., activations. and data.path.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  EvalSplit eval_split = EvalSplit::kVal;
  double eval_dropout = 0.0;
  std::optional<data::ScenarioConfig> scenario;
  std::string data_path;
  std::size_t window_stride = 0;  // 0: future_steps
  ActivationConfig activations;

  data::WindowConfig window() const;
  static RunConfig from_map(const kv::Map& map);
  static RunConfig load(const std::filesystem::path& path);
  kv::Map to_map() const;
  /// Applies a --seed override to the training and evaluation seeds; scenario data keep theirs.
  void set_seed(std::uint64_t seed);
};

struct DataSplit {
  std::vector<Scene> train;
  std::vector<Scene> val;
};

/// CSV data (split by train.val_fraction) or a scenario (n_scenes for training plus
/// train.val_scenes more for validation). `data_override` replaces data.path.
DataSplit resolve_data(const RunConfig& run, const std::string& data_override = {});

/// Writes scene_NNNNN.csv per scene plus manifest.txt.
void cmd_synth(const data::ScenarioConfig& config, const std::filesystem::path& out);

/// Writes train_log.csv, checkpoint_best.txt, checkpoint_final.txt and run_config.txt.
TrainResult cmd_train(const RunConfig& run, const std::filesystem::path& out, const std::string& data_override = {},
                      std::ostream* progress = nullptr);

/// Learned models need a checkpoint; cv and ground_truth run from the configuration.
Model load_model(const RunConfig& run, const std::optional<std::filesystem::path>& checkpoint);

/// Writes metrics.csv and metrics.txt.
Evaluation cmd_eval(const RunConfig& run, const std::optional<std::filesystem::path>& checkpoint,
                    const std::filesystem::path& out, const std::string& data_override = {});

/// Writes predictions.csv in world coordinates.
void cmd_predict(const RunConfig& run, const std::optional<std::filesystem::path>& checkpoint,
                 const std::filesystem::path& out, const std::string& data_override = {});

enum class AblationAxis { kFeatures, kRefinements, kRange };
AblationAxis parse_ablation_axis(const std::string& name);
std::string to_string(AblationAxis axis);

/// One training run per axis value with shared seed and data; writes ablation_<axis>.csv
/// and returns its contents.
std::string cmd_ablate(const RunConfig& run, AblationAxis axis, const std::filesystem::path& out,
                       const std::string& data_override = {}, std::ostream* progress = nullptr);

struct ActivationTables {
  std::string field_csv;   // channel,x1,x2,t,activation
  std::string scenes_csv;  // channel,rank,scene,activation,agent_id,x1,x2,t
};

/// Response fields of selected pooled channels over a single-point grid and per-scene
/// pooled values with their argmax point. Writes activation_field.csv and
/// activation_scenes.csv.
ActivationTables cmd_activations(const RunConfig& run, const std::filesystem::path& checkpoint,
                                 const std::filesystem::path& out, const std::string& data_override = {});

/// Computes the activation tables for an in-memory UST model.
ActivationTables activation_tables(Model& model, std::span<const Scene> scenes, const ActivationConfig& config);

}  // namespace ust::app
