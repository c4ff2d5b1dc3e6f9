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
#include <span>

#include <Eigen/Core>

#include "ust/encoder.hpp"
#include "ust/nn.hpp"
#include "ust/types.hpp"

namespace ust::baselines {

struct KalmanCVConfig {
  double process_noise = 0.1;  // white-acceleration spectral density (m^2/s^3)
  double obs_noise = 0.05;     // position std (m)
};

/// Constant-velocity Kalman filter over (x1, x2, v1, v2).
class KalmanCV {
 public:
  using State = Eigen::Vector4d;
  using Covariance = Eigen::Matrix4d;

  explicit KalmanCV(const KalmanCVConfig& config = {});

  /// Two-point initialisation: position from `first`, velocity from the difference
  /// to `second` (zero when `second` is absent).
  void initialize(const Observation& first, const Observation* second = nullptr);
  void predict(double dt);
  void update(Vec2 measurement);

  const State& state() const { return x_; }
  const Covariance& covariance() const { return p_; }
  double time() const { return t_; }
  double min_eigenvalue() const;

 private:
  void symmetrize();

  KalmanCVConfig config_;
  State x_ = State::Zero();
  Covariance p_ = Covariance::Identity();
  double t_ = 0.0;
};

/// Filters the track with gap-aware steps, then rolls the final state forward
/// `future_steps` times by `dt` without updates.
Trajectory cv_fit_predict(std::span<const Observation> track, std::size_t future_steps, double dt,
                          const KalmanCVConfig& config = {});

/// Target-only recurrent encoder: per-step (x, v) -> linear/batch-norm/ReLU -> LSTM.
struct LstmEncoderParams {
  nn::Linear embed;
  nn::BatchNorm embed_norm;
  nn::LstmCell cell;

  LstmEncoderParams() = default;
  LstmEncoderParams(std::size_t hidden, nn::Rng& rng);
  std::size_t hidden() const { return cell.hidden_size(); }
  void collect(nn::StateRefs& refs);
};

inline constexpr std::size_t kLstmInputWidth = 4;

/// Target history as [history_frames x 4] rows (x1, x2, v1, v2) from a framed scene.
/// Requires exactly one observation per frame at -history_horizon, ..., -dt, 0;
/// any gap throws DataError.
Tensor target_history_features(const Scene& framed_scene, std::size_t history_steps, double dt);

/// Final hidden state per sample: [B x H]. All histories must share a length.
nn::Var encode_histories(nn::Tape& tape, std::span<const Tensor* const> histories, LstmEncoderParams& params,
                         Mode mode);

}  // namespace ust::baselines
