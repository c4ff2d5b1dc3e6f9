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

#include "ust/baselines.hpp"

#include <cmath>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "ust/errors.hpp"
#include "ust/representation.hpp"

namespace ust::baselines {

KalmanCV::KalmanCV(const KalmanCVConfig& config) : config_(config) {
  if (config.process_noise < 0.0 || config.obs_noise < 0.0) throw ConfigError("Kalman noise must be >= 0");
}

void KalmanCV::initialize(const Observation& first, const Observation* second) {
  const double r = config_.obs_noise * config_.obs_noise;
  x_ = State::Zero();
  p_ = Covariance::Zero();
  if (second == nullptr) {
    x_ << first.pos.x, first.pos.y, 0.0, 0.0;
    t_ = first.t;
    p_.diagonal() << r, r, 100.0, 100.0;
    return;
  }
  const double dt = second->t - first.t;
  if (!(dt > 0.0)) throw DataError("Kalman initialisation needs increasing timestamps");
  const Vec2 v = (second->pos - first.pos) * (1.0 / dt);
  x_ << second->pos.x, second->pos.y, v.x, v.y;
  t_ = second->t;
  // Two-point difference: var(v) = 2r/dt^2, cov(p, v) = r/dt.
  for (int axis = 0; axis < 2; ++axis) {
    p_(axis, axis) = r;
    p_(axis + 2, axis + 2) = 2.0 * r / (dt * dt);
    p_(axis, axis + 2) = p_(axis + 2, axis) = r / dt;
  }
}

void KalmanCV::predict(double dt) {
  if (dt < 0.0) throw DataError("Kalman predict with negative dt");
  Covariance f = Covariance::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  const double q = config_.process_noise;
  Covariance noise = Covariance::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    noise(axis, axis) = q * dt * dt * dt / 3.0;
    noise(axis, axis + 2) = noise(axis + 2, axis) = q * dt * dt / 2.0;
    noise(axis + 2, axis + 2) = q * dt;
  }
  x_ = f * x_;
  p_ = f * p_ * f.transpose() + noise;
  t_ += dt;
  symmetrize();
}

void KalmanCV::update(Vec2 measurement) {
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * (config_.obs_noise * config_.obs_noise);
  const Eigen::Vector2d z(measurement.x, measurement.y);
  const Eigen::Vector2d innovation = z - h * x_;
  const Eigen::Matrix2d s = h * p_ * h.transpose() + r;
  // Noise-free observations with an exact prior can make S singular; skip the update then.
  if (std::abs(s.determinant()) < 1e-300) {
    x_.head<2>() = z;
    return;
  }
  const Eigen::Matrix<double, 4, 2> gain = p_ * h.transpose() * s.inverse();
  x_ += gain * innovation;
  // Joseph form.
  const Covariance i_kh = Covariance::Identity() - gain * h;
  p_ = i_kh * p_ * i_kh.transpose() + gain * r * gain.transpose();
  symmetrize();
}

double KalmanCV::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Covariance> solver(p_);
  return solver.eigenvalues().minCoeff();
}

void KalmanCV::symmetrize() { p_ = (0.5 * (p_ + p_.transpose())).eval(); }

Trajectory cv_fit_predict(std::span<const Observation> track, std::size_t future_steps, double dt,
                          const KalmanCVConfig& config) {
  if (track.empty()) throw DataError("cv_fit_predict: empty track");
  KalmanCV kf(config);
  if (track.size() == 1) {
    kf.initialize(track[0]);
  } else {
    kf.initialize(track[0], &track[1]);
    for (std::size_t i = 2; i < track.size(); ++i) {
      const double step = track[i].t - track[i - 1].t;
      if (!(step > 0.0)) throw DataError("cv_fit_predict: timestamps must strictly increase");
      kf.predict(step);
      kf.update(track[i].pos);
    }
  }
  Trajectory out;
  out.reserve(future_steps);
  const double t0 = kf.time();
  for (std::size_t k = 0; k < future_steps; ++k) {
    kf.predict(dt);
    out.push_back({t0 + dt * static_cast<double>(k + 1), {kf.state()(0), kf.state()(1)}});
  }
  return out;
}

LstmEncoderParams::LstmEncoderParams(std::size_t hidden, nn::Rng& rng)
    : embed("baseline.embed", kLstmInputWidth, hidden, rng),
      embed_norm("baseline.embed_norm", hidden),
      cell("baseline.cell", hidden, hidden, rng) {}

void LstmEncoderParams::collect(nn::StateRefs& refs) {
  embed.collect(refs);
  embed_norm.collect(refs);
  cell.collect(refs);
}

Tensor target_history_features(const Scene& scene, std::size_t history_steps, double dt) {
  const Track& target = scene.target();
  const std::size_t frames = history_steps + 1;
  std::vector<Observation> window;
  for (const Observation& o : target.obs)
    if (o.t <= 1e-9 && o.t >= -static_cast<double>(history_steps) * dt - 1e-9) window.push_back(o);
  if (window.size() != frames) {
    throw DataError("LSTM baseline needs a complete target history of " + std::to_string(frames) + " frames, got " +
                    std::to_string(window.size()));
  }
  for (std::size_t i = 0; i < frames; ++i) {
    const double expected = -static_cast<double>(history_steps - i) * dt;
    if (std::abs(window[i].t - expected) > 1e-6) {
      throw DataError("LSTM baseline needs uniformly sampled history; frame " + std::to_string(i) + " is at t=" +
                      std::to_string(window[i].t));
    }
  }
  const std::vector<Vec2> vel = derive_velocity(window);
  Tensor rows = Tensor::matrix(frames, kLstmInputWidth);
  for (std::size_t i = 0; i < frames; ++i) {
    rows(i, 0) = window[i].pos.x;
    rows(i, 1) = window[i].pos.y;
    rows(i, 2) = vel[i].x;
    rows(i, 3) = vel[i].y;
  }
  return rows;
}

nn::Var encode_histories(nn::Tape& tape, std::span<const Tensor* const> histories, LstmEncoderParams& params,
                         Mode mode) {
  if (histories.empty()) throw EmptySetError("encode_histories: empty batch");
  const std::size_t b = histories.size();
  const std::size_t steps = histories.front()->rows();
  for (const Tensor* h : histories) {
    if (h->rows() != steps || h->cols() != kLstmInputWidth) {
      throw DimensionError("encode_histories: every history must be [" + std::to_string(steps) + " x 4]");
    }
  }
  // Step-major stacking so one batch-norm call sees every (sample, step) row.
  Tensor stacked = Tensor::matrix(steps * b, kLstmInputWidth);
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t i = 0; i < b; ++i)
      std::copy(histories[i]->row(s).begin(), histories[i]->row(s).end(), stacked.row(s * b + i).begin());
  nn::Var embedded =
      ad::relu(params.embed_norm(tape, params.embed(tape, tape.constant(std::move(stacked))), mode == Mode::kTrain));

  const std::size_t hidden = params.hidden();
  nn::Var h = tape.constant(Tensor::matrix(b, hidden));
  nn::Var c = tape.constant(Tensor::matrix(b, hidden));
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<std::size_t> rows(b);
    for (std::size_t i = 0; i < b; ++i) rows[i] = s * b + i;
    std::tie(h, c) = params.cell.step(tape, ad::gather_rows(embedded, std::move(rows)), h, c);
  }
  return h;
}

}  // namespace ust::baselines
