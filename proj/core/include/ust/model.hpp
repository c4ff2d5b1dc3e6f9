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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ust/baselines.hpp"
#include "ust/checkpoint.hpp"
#include "ust/decoder.hpp"
#include "ust/encoder.hpp"
#include "ust/representation.hpp"

namespace ust {

enum class ModelKind { kUst, kLstm, kConstantVelocity, kGroundTruth };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::kUst;
  FeatureSet features;
  std::size_t hidden = 128;
  std::size_t refinements = 2;
  std::size_t history_steps = 6;
  std::size_t future_steps = 6;
  double dt = 0.5;
  bool align_heading = true;
  double longitudinal_limit = 90.0;
  double lateral_limit = 15.0;
  bool target_only = false;  // drop every neighbor point before encoding
  bool stochastic = false;
  std::size_t noise_dim = 16;
  double noise_sigma = 1.0;
  baselines::KalmanCVConfig kalman;

  bool learned() const { return kind == ModelKind::kUst || kind == ModelKind::kLstm; }
  std::size_t decoder_noise_dim() const { return stochastic ? noise_dim : 0; }
  RepresentationConfig representation() const;
  void validate() const;
  /// Keys without the "model." prefix; unknown keys are a ConfigError.
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_map() const;
};

/// A scene prepared for a model: reference frame, point set, optional recurrent
/// history, flattened future (x1, x2, x1, x2, ...) in the target frame.
struct Sample {
  Scene framed;
  PointSet points;
  Tensor history;
  Tensor future;
  AgentType type = AgentType::kUnknown;
};

/// Throws DataError when the scene cannot feed this model (e.g. gaps for the LSTM).
Sample prepare_sample(const Scene& raw, const ModelConfig& config);
std::vector<Sample> prepare_samples(std::span<const Scene> scenes, const ModelConfig& config);

/// Encoder plus decoder with every persistent tensor, or a parameter-free baseline.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  nn::StateRefs state();
  std::vector<ad::Parameter*> parameters() { return state().params; }

  /// Contexts [B x H] for learned models.
  nn::Var encode(nn::Tape& tape, std::span<const Sample* const> batch, Mode mode, EncoderTrace* trace = nullptr);
  Rollout decode(nn::Tape& tape, nn::Var context, nn::Var noise = {});

  /// Deterministic predictions in the target frame.
  std::vector<Trajectory> predict(std::span<const Sample* const> batch);
  /// n_samples stochastic predictions per sample; falls back to copies of the
  /// deterministic output for non-stochastic models.
  std::vector<std::vector<Trajectory>> predict_samples(std::span<const Sample* const> batch, std::size_t n_samples,
                                                       std::uint64_t seed);

  EncoderParams& encoder() { return encoder_; }
  DecoderParams& decoder() { return decoder_; }
  baselines::LstmEncoderParams& history_encoder() { return history_encoder_; }

  Checkpoint to_checkpoint() const;
  static Model from_checkpoint(const Checkpoint& ckpt);

 private:
  ModelConfig config_;
  EncoderParams encoder_;
  baselines::LstmEncoderParams history_encoder_;
  DecoderParams decoder_;
};

/// Prediction of a batch, evaluated in chunks to bound memory.
std::vector<Trajectory> predict_all(Model& model, std::span<const Sample> samples, std::size_t chunk = 256);

/// Ground truth of a sample as a trajectory in the target frame.
Trajectory future_trajectory(const Sample& sample);

}  // namespace ust
