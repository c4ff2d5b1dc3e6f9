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

#include "ust/model.hpp"

#include <algorithm>
#include <cstdio>

#include "ust/errors.hpp"
#include "ust/kv.hpp"

namespace ust {

namespace {

std::string fmt(double v) { return kv::from_double(v); }

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kUst:
      return "ust";
    case ModelKind::kLstm:
      return "lstm";
    case ModelKind::kConstantVelocity:
      return "cv";
    case ModelKind::kGroundTruth:
      return "ground_truth";
  }
  return "ust";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "ust") return ModelKind::kUst;
  if (name == "lstm") return ModelKind::kLstm;
  if (name == "cv") return ModelKind::kConstantVelocity;
  if (name == "ground_truth") return ModelKind::kGroundTruth;
  throw ConfigError("unknown model kind '" + name + "' (valid kinds: ust, lstm, cv, ground_truth)");
}

RepresentationConfig ModelConfig::representation() const {
  RepresentationConfig r;
  r.features = features;
  r.align_heading = align_heading;
  r.history_horizon = dt * static_cast<double>(history_steps);
  r.longitudinal_limit = longitudinal_limit;
  r.lateral_limit = lateral_limit;
  return r;
}

void ModelConfig::validate() const {
  if (hidden == 0) throw ConfigError("model.hidden must be >= 1");
  if (future_steps == 0) throw ConfigError("model.future_steps must be >= 1");
  if (history_steps == 0) throw ConfigError("model.history_steps must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("model.dt must be > 0");
  if (!(longitudinal_limit > 0.0) || !(lateral_limit > 0.0)) throw ConfigError("model range limits must be > 0");
  if (stochastic && noise_dim == 0) throw ConfigError("stochastic decoding needs model.noise_dim >= 1");
  if (noise_sigma < 0.0) throw ConfigError("model.noise_sigma must be >= 0");
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "kind") {
      c.kind = parse_model_kind(v);
    } else if (k == "features") {
      c.features = FeatureSet::parse(v);
    } else if (k == "hidden") {
      c.hidden = kv::to_size(k, v);
    } else if (k == "refinements") {
      c.refinements = kv::to_size(k, v);
    } else if (k == "history_steps") {
      c.history_steps = kv::to_size(k, v);
    } else if (k == "future_steps") {
      c.future_steps = kv::to_size(k, v);
    } else if (k == "dt") {
      c.dt = kv::to_double(k, v);
    } else if (k == "align_heading") {
      c.align_heading = kv::to_bool(k, v);
    } else if (k == "range") {
      c.longitudinal_limit = kv::to_double(k, v);
    } else if (k == "longitudinal_limit") {
      c.longitudinal_limit = kv::to_double(k, v);
    } else if (k == "lateral_limit") {
      c.lateral_limit = kv::to_double(k, v);
    } else if (k == "target_only") {
      c.target_only = kv::to_bool(k, v);
    } else if (k == "decoder") {
      if (v != "deterministic" && v != "stochastic") {
        throw ConfigError("model.decoder must be deterministic or stochastic, got '" + v + "'");
      }
      c.stochastic = v == "stochastic";
    } else if (k == "noise_dim") {
      c.noise_dim = kv::to_size(k, v);
    } else if (k == "noise_sigma") {
      c.noise_sigma = kv::to_double(k, v);
    } else if (k == "kalman_process_noise") {
      c.kalman.process_noise = kv::to_double(k, v);
    } else if (k == "kalman_obs_noise") {
      c.kalman.obs_noise = kv::to_double(k, v);
    } else {
      throw ConfigError("unknown model key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {{"kind", to_string(kind)},
          {"features", features.to_string()},
          {"hidden", std::to_string(hidden)},
          {"refinements", std::to_string(refinements)},
          {"history_steps", std::to_string(history_steps)},
          {"future_steps", std::to_string(future_steps)},
          {"dt", fmt(dt)},
          {"align_heading", align_heading ? "true" : "false"},
          {"longitudinal_limit", fmt(longitudinal_limit)},
          {"lateral_limit", fmt(lateral_limit)},
          {"target_only", target_only ? "true" : "false"},
          {"decoder", stochastic ? "stochastic" : "deterministic"},
          {"noise_dim", std::to_string(noise_dim)},
          {"noise_sigma", fmt(noise_sigma)},
          {"kalman_process_noise", fmt(kalman.process_noise)},
          {"kalman_obs_noise", fmt(kalman.obs_noise)}};
}

Sample prepare_sample(const Scene& raw, const ModelConfig& config) {
  Sample s;
  s.framed = to_reference_frame(raw, config.align_heading);
  s.type = s.framed.target().type;
  const RepresentationConfig rep = config.representation();
  s.points = filter_range(build_point_set(s.framed, rep.features, rep.history_horizon), rep.longitudinal_limit,
                          rep.lateral_limit);
  if (config.target_only) s.points = target_only(s.points);
  if (s.points.size() == 0) throw EmptySetError("scene has no observed point inside the history horizon");
  if (config.kind == ModelKind::kLstm) {
    s.history = baselines::target_history_features(s.framed, config.history_steps, config.dt);
  }
  if (!s.framed.future.empty()) {
    if (s.framed.future.size() != config.future_steps) {
      throw DataError("scene future has " + std::to_string(s.framed.future.size()) + " steps, model expects " +
                      std::to_string(config.future_steps));
    }
    s.future = Tensor::matrix(1, 2 * config.future_steps);
    for (std::size_t k = 0; k < config.future_steps; ++k) {
      s.future[2 * k] = s.framed.future[k].pos.x;
      s.future[2 * k + 1] = s.framed.future[k].pos.y;
    }
  }
  return s;
}

std::vector<Sample> prepare_samples(std::span<const Scene> scenes, const ModelConfig& config) {
  std::vector<Sample> out;
  out.reserve(scenes.size());
  for (const Scene& s : scenes) out.push_back(prepare_sample(s, config));
  return out;
}

Trajectory future_trajectory(const Sample& sample) { return sample.framed.future; }

Model::Model(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  nn::Rng rng = seeded(init_seed, 0);
  if (config_.kind == ModelKind::kUst) {
    encoder_ = EncoderParams(EncoderConfig{config_.features.width(), config_.hidden, config_.refinements}, rng);
  } else if (config_.kind == ModelKind::kLstm) {
    history_encoder_ = baselines::LstmEncoderParams(config_.hidden, rng);
  }
  if (config_.learned()) {
    DecoderConfig dc;
    dc.context_width = config_.hidden;
    dc.hidden = config_.hidden;
    dc.future_steps = config_.future_steps;
    dc.dt = config_.dt;
    dc.noise_dim = config_.decoder_noise_dim();
    dc.noise_sigma = config_.noise_sigma;
    decoder_ = DecoderParams(dc, rng);
  }
}

nn::StateRefs Model::state() {
  nn::StateRefs refs;
  if (config_.kind == ModelKind::kUst) encoder_.collect(refs);
  if (config_.kind == ModelKind::kLstm) history_encoder_.collect(refs);
  if (config_.learned()) decoder_.collect(refs);
  return refs;
}

nn::Var Model::encode(nn::Tape& tape, std::span<const Sample* const> batch, Mode mode, EncoderTrace* trace) {
  if (config_.kind == ModelKind::kUst) {
    std::vector<const PointSet*> sets;
    sets.reserve(batch.size());
    for (const Sample* s : batch) sets.push_back(&s->points);
    return batch_st_pooling(tape, sets, encoder_, mode, trace);
  }
  if (config_.kind == ModelKind::kLstm) {
    std::vector<const Tensor*> histories;
    histories.reserve(batch.size());
    for (const Sample* s : batch) {
      if (s->history.size() == 0) throw DataError("sample was prepared without a target history");
      histories.push_back(&s->history);
    }
    return baselines::encode_histories(tape, histories, history_encoder_, mode);
  }
  throw ContractError("model kind '" + to_string(config_.kind) + "' has no encoder");
}

Rollout Model::decode(nn::Tape& tape, nn::Var context, nn::Var noise) {
  return decode_batch(tape, context, decoder_, noise);
}

std::vector<Trajectory> Model::predict(std::span<const Sample* const> batch) {
  std::vector<Trajectory> out;
  out.reserve(batch.size());
  if (config_.kind == ModelKind::kGroundTruth) {
    for (const Sample* s : batch) out.push_back(s->framed.future);
    return out;
  }
  if (config_.kind == ModelKind::kConstantVelocity) {
    for (const Sample* s : batch) {
      Trajectory pred = baselines::cv_fit_predict(s->framed.target().obs, config_.future_steps, config_.dt,
                                                  config_.kalman);
      // Report at the nominal future times so metrics align with ground truth.
      for (std::size_t k = 0; k < pred.size(); ++k) pred[k].t = config_.dt * static_cast<double>(k + 1);
      out.push_back(std::move(pred));
    }
    return out;
  }
  if (batch.empty()) return out;
  nn::Tape tape(false);
  const Rollout r = decode(tape, encode(tape, batch, Mode::kEval));
  for (std::size_t b = 0; b < batch.size(); ++b) out.push_back(rollout_row(r, b, config_.dt));
  return out;
}

std::vector<std::vector<Trajectory>> Model::predict_samples(std::span<const Sample* const> batch,
                                                            std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ConfigError("need at least one prediction sample");
  std::vector<std::vector<Trajectory>> out(batch.size());
  if (!config_.learned() || !config_.stochastic) {
    const auto det = predict(batch);
    for (std::size_t b = 0; b < batch.size(); ++b) out[b].assign(n_samples, det[b]);
    return out;
  }
  if (batch.empty()) return out;
  nn::Tape tape(false);
  const nn::Var context = encode(tape, batch, Mode::kEval);
  std::vector<std::size_t> rows;
  rows.reserve(batch.size() * n_samples);
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (std::size_t n = 0; n < n_samples; ++n) rows.push_back(b);
  Tensor noise = Tensor::matrix(rows.size(), decoder_.config.noise_dim);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    nn::Rng rng = seeded(seed, b);
    const Tensor z = sample_noise(n_samples, decoder_.config, rng);
    std::copy(z.values().begin(), z.values().end(), noise.row(b * n_samples).begin());
  }
  const Rollout r = decode(tape, ad::gather_rows(context, rows), tape.constant(std::move(noise)));
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (std::size_t n = 0; n < n_samples; ++n) out[b].push_back(rollout_row(r, b * n_samples + n, config_.dt));
  return out;
}

Checkpoint Model::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.hidden_size = config_.hidden;
  for (const auto& [k, v] : config_.to_map()) ckpt.meta["model." + k] = v;
  Model& self = const_cast<Model&>(*this);
  capture_state(self.state(), ckpt);
  return ckpt;
}

Model Model::from_checkpoint(const Checkpoint& ckpt) {
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : ckpt.meta)
    if (k.rfind("model.", 0) == 0) kv[k.substr(6)] = v;
  if (kv.empty()) throw DataError("checkpoint carries no model configuration");
  ModelConfig config;
  try {
    config = ModelConfig::from_map(kv);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint model configuration: ") + e.what());
  }
  if (config.hidden != ckpt.hidden_size) throw DataError("checkpoint hidden size disagrees with its configuration");
  Model model(config, 0);
  nn::StateRefs refs = model.state();
  restore_state(ckpt, refs);
  return model;
}

std::vector<Trajectory> predict_all(Model& model, std::span<const Sample> samples, std::size_t chunk) {
  std::vector<Trajectory> out;
  out.reserve(samples.size());
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t i = 0; i < samples.size(); i += chunk) {
    std::vector<const Sample*> batch;
    for (std::size_t j = i; j < std::min(samples.size(), i + chunk); ++j) batch.push_back(&samples[j]);
    auto p = model.predict(batch);
    std::move(p.begin(), p.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace ust
