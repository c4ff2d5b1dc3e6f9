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

#include "ust/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "ust/data_io.hpp"
#include "ust/errors.hpp"
#include "ust/kv.hpp"

namespace ust {

namespace {

std::string fmt(double v) { return kv::from_double(v); }

std::string fmt_log(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

std::vector<double> parse_horizons(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(kv::to_double(key, item));
  }
  return out;
}

constexpr const char* kTypeWeightKeys[kAgentTypeCount] = {"weight_vehicle", "weight_pedestrian", "weight_bicycle",
                                                           "weight_unknown"};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (variety_samples == 0) throw ConfigError("train.variety_samples must be >= 1");
  if (augment_dropout < 0.0 || augment_dropout > 1.0) throw ConfigError("train.augment_dropout must be in [0, 1]");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("train.val_fraction must be in [0, 1)");
  for (double w : type_weights)
    if (w < 0.0) throw ConfigError("type weights must be >= 0");
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "batch") {
      c.batch_size = kv::to_size(k, v);
    } else if (k == "epochs") {
      c.epochs = kv::to_size(k, v);
    } else if (k == "lr") {
      c.lr = kv::to_double(k, v);
    } else if (k == "weight_decay") {
      c.weight_decay = kv::to_double(k, v);
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(kv::to_int(k, v));
    } else if (k == "variety_samples") {
      c.variety_samples = kv::to_size(k, v);
    } else if (k == "augment_dropout") {
      c.augment_dropout = kv::to_double(k, v);
    } else if (k == "max_steps") {
      c.max_steps = kv::to_size(k, v);
    } else if (k == "val_fraction") {
      c.val_fraction = kv::to_double(k, v);
    } else if (k == "val_scenes") {
      c.val_scenes = kv::to_size(k, v);
    } else {
      const auto* it = std::find(std::begin(kTypeWeightKeys), std::end(kTypeWeightKeys), k);
      if (it == std::end(kTypeWeightKeys)) throw ConfigError("unknown train key '" + k + "'");
      c.type_weights[static_cast<std::size_t>(it - std::begin(kTypeWeightKeys))] = kv::to_double(k, v);
    }
  }
  c.validate();
  return c;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> m{{"batch", std::to_string(batch_size)},
                                       {"epochs", std::to_string(epochs)},
                                       {"lr", fmt(lr)},
                                       {"weight_decay", fmt(weight_decay)},
                                       {"seed", std::to_string(seed)},
                                       {"variety_samples", std::to_string(variety_samples)},
                                       {"augment_dropout", fmt(augment_dropout)},
                                       {"max_steps", std::to_string(max_steps)},
                                       {"val_fraction", fmt(val_fraction)},
                                       {"val_scenes", std::to_string(val_scenes)}};
  for (std::size_t i = 0; i < kAgentTypeCount; ++i) m[kTypeWeightKeys[i]] = fmt(type_weights[i]);
  return m;
}

EvalConfig EvalConfig::from_map(const std::map<std::string, std::string>& kv) {
  EvalConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "mon_n") {
      c.mon_n = kv::to_size(k, v);
      if (c.mon_n == 0) throw ConfigError("eval.mon_n must be >= 1");
    } else if (k == "horizons") {
      c.horizons = parse_horizons(k, v);
    } else if (k == "joint_selection") {
      c.joint_selection = kv::to_bool(k, v);
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(kv::to_int(k, v));
    } else {
      throw ConfigError("unknown eval key '" + k + "'");
    }
  }
  return c;
}

std::map<std::string, std::string> EvalConfig::to_map() const {
  std::string h;
  for (std::size_t i = 0; i < horizons.size(); ++i) h += (i ? "," : "") + fmt(horizons[i]);
  return {{"mon_n", std::to_string(mon_n)},
          {"horizons", h},
          {"joint_selection", joint_selection ? "true" : "false"},
          {"seed", std::to_string(seed)}};
}

double train_step(Model& model, std::span<const Sample* const> batch, const TrainConfig& config,
                  optim::AdamState& adam, std::uint64_t step_seed) {
  const ModelConfig& mc = model.config();
  const std::size_t b = batch.size();
  const std::size_t steps = mc.future_steps;
  nn::Tape tape;
  nn::Var context = model.encode(tape, batch, Mode::kTrain);

  const std::size_t k = mc.stochastic ? config.variety_samples : 1;
  Tensor gt = Tensor::matrix(b * k, 2 * steps);
  std::vector<double> weights(b * k);
  std::vector<std::size_t> rows(b * k);
  for (std::size_t i = 0; i < b; ++i) {
    if (batch[i]->future.size() != 2 * steps) throw DataError("training sample without a complete future");
    for (std::size_t n = 0; n < k; ++n) {
      const std::size_t r = i * k + n;
      std::copy(batch[i]->future.values().begin(), batch[i]->future.values().end(), gt.row(r).begin());
      weights[r] = config.type_weights[static_cast<std::size_t>(batch[i]->type)];
      rows[r] = i;
    }
  }

  nn::Var loss_rows;
  if (mc.stochastic) {
    nn::Rng rng = seeded(step_seed, 0, 7);
    nn::Var noise = tape.constant(sample_noise(b * k, model.decoder().config, rng));
    const Rollout r = model.decode(tape, ad::gather_rows(context, rows), noise);
    nn::Var all = l2_loss_rows(tape, r, gt, weights);
    // Variety loss: only the best rollout of each sample receives gradient.
    std::vector<std::size_t> best(b);
    for (std::size_t i = 0; i < b; ++i) {
      std::size_t arg = i * k;
      for (std::size_t n = 1; n < k; ++n)
        if (all.value()[i * k + n] < all.value()[arg]) arg = i * k + n;
      best[i] = arg;
    }
    loss_rows = ad::gather_rows(all, std::move(best));
  } else {
    loss_rows = l2_loss_rows(tape, model.decode(tape, context), gt, weights);
  }
  nn::Var loss = ad::mean(loss_rows);
  const double value = loss.value()[0];

  nn::StateRefs refs = model.state();
  nn::zero_grads(refs);
  tape.backward(loss);
  const double norm = optim::grad_norm(refs.params);
  if (!std::isfinite(value) || !std::isfinite(norm)) {
    throw NumericError("non-finite training loss at step " + std::to_string(adam.step_count + 1) +
                       " (lr=" + fmt_log(adam.config.lr) + ", grad_norm=" + fmt_log(norm) +
                       ", loss=" + fmt_log(value) + ")");
  }
  optim::adam_step(refs.params, adam);
  return value;
}

Evaluation evaluate(Model& model, std::span<const Sample> samples, const EvalConfig& config) {
  Evaluation ev;
  ev.predictions = predict_all(model, samples);
  std::vector<Trajectory> gts;
  std::vector<AgentType> types;
  gts.reserve(samples.size());
  for (const Sample& s : samples) {
    gts.push_back(future_trajectory(s));
    types.push_back(s.type);
  }
  ev.report = metrics::build_report(ev.predictions, gts, types, config.horizons);
  if (model.config().learned() && model.config().stochastic) {
    if (config.mon_n == 0) throw ConfigError("eval.mon_n must be >= 1");
    std::vector<std::vector<Trajectory>> sets;
    sets.reserve(samples.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t i = 0; i < samples.size(); i += kChunk) {
      std::vector<const Sample*> batch;
      for (std::size_t j = i; j < std::min(samples.size(), i + kChunk); ++j) batch.push_back(&samples[j]);
      auto s = model.predict_samples(batch, config.mon_n, config.seed * 1000003ULL + i);
      std::move(s.begin(), s.end(), std::back_inserter(sets));
    }
    const auto mon = metrics::mon_metrics(sets, gts, config.joint_selection);
    ev.report.mon_ade = mon.ade;
    ev.report.mon_fde = mon.fde;
  }
  return ev;
}

TrainResult train(Model& model, std::span<const Scene> train_scenes, std::span<const Scene> val_scenes,
                  const TrainConfig& config, std::ostream* progress) {
  config.validate();
  if (!model.config().learned()) throw ConfigError("model kind '" + to_string(model.config().kind) + "' is not trainable");
  TrainResult result;
  const std::vector<Sample> val = prepare_samples(val_scenes, model.config());
  std::vector<Sample> train_samples = prepare_samples(train_scenes, model.config());
  if (train_samples.empty() && config.epochs > 0) throw DataError("no training scenes");

  optim::AdamConfig ac;
  ac.lr = config.lr;
  ac.weight_decay = config.weight_decay;
  nn::StateRefs refs = model.state();
  optim::AdamState adam = optim::make_adam_state(refs.params, ac);

  std::vector<std::size_t> indices(train_samples.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  double best_ade = std::numeric_limits<double>::infinity();
  result.best = model.to_checkpoint();
  result.final = result.best;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps > 0 && result.steps >= config.max_steps) break;
    if (config.augment_dropout > 0.0) {
      for (std::size_t i = 0; i < train_scenes.size(); ++i) {
        Scene s = train_scenes[i];
        std::mt19937_64 rng = seeded(config.seed, epoch, static_cast<std::uint64_t>(i) * 2 + 1);
        data::apply_dropout(s, config.augment_dropout, 0.0, rng);
        train_samples[i] = prepare_sample(s, model.config());
      }
    }
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (const auto& batch_idx : data::epoch_batches(indices, config.batch_size, config.seed, epoch)) {
      if (config.max_steps > 0 && result.steps >= config.max_steps) break;
      std::vector<const Sample*> batch;
      batch.reserve(batch_idx.size());
      for (std::size_t i : batch_idx) batch.push_back(&train_samples[i]);
      const double loss = train_step(model, batch, config, adam,
                                     config.seed * 0x9E3779B97F4A7C15ULL + result.steps);
      loss_sum += loss * static_cast<double>(batch.size());
      loss_count += batch.size();
      ++result.steps;
    }
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.steps = result.steps;
    entry.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    if (!val.empty()) {
      EvalConfig top1;
      top1.mon_n = 1;
      const Evaluation ev = evaluate(model, val, top1);
      entry.val_ade = ev.report.ade;
      entry.val_fde = ev.report.fde;
      if (ev.report.ade < best_ade) {
        best_ade = ev.report.ade;
        result.best = model.to_checkpoint();
        result.best_epoch = entry.epoch;
      }
    }
    if (progress) {
      *progress << "epoch " << entry.epoch << " steps " << entry.steps << " loss " << fmt_log(entry.train_loss);
      if (entry.val_ade) *progress << " val_ade " << fmt_log(*entry.val_ade) << " val_fde " << fmt_log(*entry.val_fde);
      *progress << '\n';
    }
    result.log.push_back(entry);
  }
  result.final = model.to_checkpoint();
  if (val.empty()) {
    result.best = result.final;
    result.best_epoch = result.log.empty() ? 0 : result.log.back().epoch;
  }
  for (Checkpoint* c : {&result.best, &result.final}) {
    for (const auto& [k, v] : config.to_map()) c->meta["train." + k] = v;
  }
  result.best.meta["train.best_epoch"] = std::to_string(result.best_epoch);
  result.final.meta["train.steps"] = std::to_string(result.steps);
  return result;
}

std::string log_to_csv(std::span<const EpochLog> log) {
  std::ostringstream os;
  os << "epoch,steps,train_loss,val_ade,val_fde\n";
  for (const EpochLog& e : log) {
    os << e.epoch << ',' << e.steps << ',' << fmt_log(e.train_loss) << ','
       << (e.val_ade ? fmt_log(*e.val_ade) : std::string()) << ',' << (e.val_fde ? fmt_log(*e.val_fde) : std::string())
       << '\n';
  }
  return os.str();
}

}  // namespace ust
