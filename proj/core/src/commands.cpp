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

#include "ust/kv.hpp"
#include "ust/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ust/errors.hpp"

namespace ust::app {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) { return kv::from_double(v); }

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("failed writing " + path.string());
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(kv::to_size(key, item));
  return out;
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0xE7A1u};
  return std::mt19937_64(seq);
}

std::vector<Scene> evaluation_scenes(const RunConfig& run, const std::string& data_override) {
  DataSplit split = resolve_data(run, data_override);
  std::vector<Scene> scenes;
  if (run.eval_split == EvalSplit::kAll) {
    scenes = std::move(split.train);
    std::move(split.val.begin(), split.val.end(), std::back_inserter(scenes));
  } else {
    scenes = std::move(split.val);
  }
  if (scenes.empty()) throw DataError("evaluation set is empty");
  if (run.eval_dropout > 0.0) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      std::mt19937_64 rng = seeded(run.eval.seed, i);
      data::apply_dropout(scenes[i], run.eval_dropout, 0.0, rng);
    }
  }
  return scenes;
}

std::vector<double> axis_values(double lo, double hi, double step, const char* name) {
  if (!(step > 0.0) || hi < lo) throw ConfigError(std::string("activation grid ") + name + " needs step > 0 and max >= min");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
  return v;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

// ---- configuration ---------------------------------------------------------------

data::WindowConfig RunConfig::window() const {
  return data::WindowConfig{model.dt, model.history_steps, model.future_steps,
                            window_stride ? window_stride : model.future_steps};
}

RunConfig RunConfig::from_map(const kv::Map& map) {
  kv::Map model_kv, train_kv, eval_kv, scenario_kv;
  RunConfig run;
  auto strip = [](const std::string& key, const std::string& prefix, kv::Map& into, const std::string& value) {
    if (key.rfind(prefix, 0) != 0) return false;
    into[key.substr(prefix.size())] = value;
    return true;
  };
  for (const auto& [k, v] : map) {
    if (strip(k, "model.", model_kv, v) || strip(k, "train.", train_kv, v) || strip(k, "scenario.", scenario_kv, v)) {
      continue;
    }
    if (k == "eval.split") {
      if (v != "val" && v != "all") throw ConfigError("eval.split must be val or all, got '" + v + "'");
      run.eval_split = v == "all" ? EvalSplit::kAll : EvalSplit::kVal;
    } else if (k == "eval.dropout") {
      run.eval_dropout = kv::to_double(k, v);
      if (run.eval_dropout < 0.0 || run.eval_dropout > 1.0) throw ConfigError("eval.dropout must be in [0, 1]");
    } else if (k.rfind("eval.", 0) == 0) {
      eval_kv[k.substr(5)] = v;
    } else if (k == "data.path") {
      run.data_path = v;
    } else if (k == "window.stride") {
      run.window_stride = kv::to_size(k, v);
    } else if (k == "activations.channels") {
      run.activations.channels = parse_list(k, v);
    } else if (k.rfind("activations.", 0) == 0) {
      const std::string f = k.substr(12);
      ActivationConfig& a = run.activations;
      double* slot = f == "x1_min"   ? &a.x1_min
                     : f == "x1_max" ? &a.x1_max
                     : f == "x1_step" ? &a.x1_step
                     : f == "x2_min"  ? &a.x2_min
                     : f == "x2_max"  ? &a.x2_max
                     : f == "x2_step" ? &a.x2_step
                     : f == "t_min"   ? &a.t_min
                     : f == "t_max"   ? &a.t_max
                     : f == "t_step"  ? &a.t_step
                                      : nullptr;
      if (slot == nullptr) throw ConfigError("unknown activations key '" + k + "'");
      *slot = kv::to_double(k, v);
    } else {
      throw ConfigError("unknown configuration key '" + k + "'");
    }
  }
  run.model = ModelConfig::from_map(model_kv);
  run.train = TrainConfig::from_map(train_kv);
  run.eval = EvalConfig::from_map(eval_kv);
  if (!scenario_kv.empty()) {
    // The scenario's time grid follows the model unless given explicitly.
    scenario_kv.try_emplace("dt", fmt(run.model.dt));
    scenario_kv.try_emplace("history_steps", std::to_string(run.model.history_steps));
    scenario_kv.try_emplace("future_steps", std::to_string(run.model.future_steps));
    run.scenario = data::ScenarioConfig::from_map(scenario_kv);
    const auto& s = *run.scenario;
    if (s.dt != run.model.dt || s.history_steps != run.model.history_steps ||
        s.future_steps != run.model.future_steps) {
      throw ConfigError("scenario dt/history_steps/future_steps disagree with the model configuration");
    }
  }
  return run;
}

RunConfig RunConfig::load(const fs::path& path) { return from_map(kv::parse_file(path)); }

kv::Map RunConfig::to_map() const {
  kv::Map m;
  for (const auto& [k, v] : model.to_map()) m["model." + k] = v;
  for (const auto& [k, v] : train.to_map()) m["train." + k] = v;
  for (const auto& [k, v] : eval.to_map()) m["eval." + k] = v;
  m["eval.split"] = eval_split == EvalSplit::kAll ? "all" : "val";
  m["eval.dropout"] = fmt(eval_dropout);
  if (scenario)
    for (const auto& [k, v] : scenario->to_map()) m["scenario." + k] = v;
  if (!data_path.empty()) m["data.path"] = data_path;
  m["window.stride"] = std::to_string(window().stride);
  std::string channels;
  for (std::size_t i = 0; i < activations.channels.size(); ++i)
    channels += (i ? "," : "") + std::to_string(activations.channels[i]);
  m["activations.channels"] = channels;
  return m;
}

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  eval.seed = seed;
}

DataSplit resolve_data(const RunConfig& run, const std::string& data_override) {
  const std::string path = data_override.empty() ? run.data_path : data_override;
  DataSplit out;
  if (!path.empty()) {
    std::vector<Scene> scenes = data::load_scenes(path, run.window());
    const data::Split split = data::split_indices(scenes.size(), run.train.val_fraction, run.train.seed);
    for (std::size_t i : split.train) out.train.push_back(scenes[i]);
    for (std::size_t i : split.val) out.val.push_back(scenes[i]);
    return out;
  }
  if (!run.scenario) throw ConfigError("no data source: set data.path, pass --data or give scenario.* keys");
  data::ScenarioConfig cfg = *run.scenario;
  const std::size_t n_train = cfg.n_scenes;
  cfg.n_scenes = n_train + run.train.val_scenes;
  std::vector<Scene> scenes = data::generate_synthetic(cfg);
  out.train.assign(std::make_move_iterator(scenes.begin()),
                   std::make_move_iterator(scenes.begin() + static_cast<std::ptrdiff_t>(n_train)));
  out.val.assign(std::make_move_iterator(scenes.begin() + static_cast<std::ptrdiff_t>(n_train)),
                 std::make_move_iterator(scenes.end()));
  return out;
}

// ---- commands ------------------------------------------------------------------

void cmd_synth(const data::ScenarioConfig& config, const fs::path& out) {
  config.validate();
  const std::vector<Scene> scenes = data::generate_synthetic(config);
  ensure_dir(out);
  std::ostringstream manifest;
  for (const auto& [k, v] : config.to_map()) manifest << k << '=' << v << '\n';
  manifest << "files=" << scenes.size() << '\n';
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.csv", i);
    std::ostringstream csv;
    const auto tracks = data::scene_to_tracks(scenes[i]);
    data::write_csv(csv, tracks);
    write_text(out / name, csv.str());
    manifest << "file." << i << '=' << name << " target=" << scenes[i].target_id << " agents=" << tracks.size()
             << '\n';
  }
  write_text(out / "manifest.txt", manifest.str());
}

TrainResult cmd_train(const RunConfig& run, const fs::path& out, const std::string& data_override,
                      std::ostream* progress) {
  const DataSplit data = resolve_data(run, data_override);
  Model model(run.model, run.train.seed);
  TrainResult result = train(model, data.train, data.val, run.train, progress);
  ensure_dir(out);
  write_text(out / "train_log.csv", log_to_csv(result.log));
  std::ostringstream best, final;
  write_checkpoint(best, result.best);
  write_checkpoint(final, result.final);
  write_text(out / "checkpoint_best.txt", best.str());
  write_text(out / "checkpoint_final.txt", final.str());
  write_text(out / "run_config.txt", kv::format(run.to_map()));
  return result;
}

Model load_model(const RunConfig& run, const std::optional<fs::path>& checkpoint) {
  if (checkpoint) return Model::from_checkpoint(load_checkpoint(*checkpoint));
  if (run.model.learned()) {
    throw ConfigError("model kind '" + to_string(run.model.kind) + "' needs --checkpoint");
  }
  return Model(run.model, 0);
}

Evaluation cmd_eval(const RunConfig& run, const std::optional<fs::path>& checkpoint, const fs::path& out,
                    const std::string& data_override) {
  Model model = load_model(run, checkpoint);
  RunConfig effective = run;
  effective.model = model.config();
  const std::vector<Scene> scenes = evaluation_scenes(effective, data_override);
  const std::vector<Sample> samples = prepare_samples(scenes, model.config());
  Evaluation ev = evaluate(model, samples, run.eval);
  ensure_dir(out);
  write_text(out / "metrics.csv", metrics::report_to_csv(ev.report));
  write_text(out / "metrics.txt", metrics::report_to_text(ev.report));
  return ev;
}

void cmd_predict(const RunConfig& run, const std::optional<fs::path>& checkpoint, const fs::path& out,
                 const std::string& data_override) {
  Model model = load_model(run, checkpoint);
  RunConfig effective = run;
  effective.model = model.config();
  const std::vector<Scene> scenes = evaluation_scenes(effective, data_override);
  const std::vector<Sample> samples = prepare_samples(scenes, model.config());
  const std::size_t n = model.config().stochastic ? run.eval.mon_n : 1;
  std::ostringstream csv;
  csv << "scene,target_id,agent_type,sample,step,timestamp,x,y\n";
  constexpr std::size_t kChunk = 64;
  for (std::size_t i = 0; i < samples.size(); i += kChunk) {
    std::vector<const Sample*> batch;
    for (std::size_t j = i; j < std::min(samples.size(), i + kChunk); ++j) batch.push_back(&samples[j]);
    const auto sets = model.predict_samples(batch, n, run.eval.seed * 1000003ULL + i);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const Scene& framed = batch[b]->framed;
      for (std::size_t s = 0; s < sets[b].size(); ++s) {
        for (std::size_t k = 0; k < sets[b][s].size(); ++k) {
          const Observation world = framed.frame.to_world(sets[b][s][k]);
          csv << (i + b) << ',' << framed.target_id << ',' << to_string(batch[b]->type) << ',' << s << ','
              << (k + 1) << ',' << fmt(world.t) << ',' << fmt(world.pos.x) << ',' << fmt(world.pos.y) << '\n';
        }
      }
    }
  }
  ensure_dir(out);
  write_text(out / "predictions.csv", csv.str());
}

AblationAxis parse_ablation_axis(const std::string& name) {
  if (name == "features") return AblationAxis::kFeatures;
  if (name == "refinements") return AblationAxis::kRefinements;
  if (name == "range") return AblationAxis::kRange;
  throw ConfigError("unknown ablation axis '" + name + "' (valid axes: features, refinements, range)");
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kFeatures:
      return "features";
    case AblationAxis::kRefinements:
      return "refinements";
    case AblationAxis::kRange:
      return "range";
  }
  return "features";
}

std::string cmd_ablate(const RunConfig& run, AblationAxis axis, const fs::path& out, const std::string& data_override,
                       std::ostream* progress) {
  const DataSplit data = resolve_data(run, data_override);
  if (data.val.empty()) throw DataError("ablation needs a non-empty validation split");
  struct Cell {
    std::string label;
    ModelConfig model;
  };
  std::vector<Cell> cells;
  std::string header;
  switch (axis) {
    case AblationAxis::kFeatures: {
      header = "position,time,velocity,ade,fde";
      const bool rows[3][3] = {{true, false, false}, {true, true, false}, {true, true, true}};
      for (const auto& r : rows) {
        Cell c{std::string(r[0] ? "1" : "0") + ',' + (r[1] ? "1" : "0") + ',' + (r[2] ? "1" : "0"), run.model};
        c.model.kind = ModelKind::kUst;
        c.model.features.position = r[0];
        c.model.features.time = r[1];
        c.model.features.velocity = r[2];
        cells.push_back(c);
      }
      break;
    }
    case AblationAxis::kRefinements:
      header = "refinements,ade,fde";
      for (std::size_t r = 0; r <= 4; ++r) {
        Cell c{std::to_string(r), run.model};
        c.model.kind = ModelKind::kUst;
        c.model.refinements = r;
        cells.push_back(c);
      }
      break;
    case AblationAxis::kRange:
      header = "variant,longitudinal_limit,lateral_limit,ade,fde";
      for (double limit : {90.0, 180.0}) {
        Cell c{std::string(limit == 90.0 ? "UST" : "UST-180") + ',' + fmt_short(limit) + ',' +
                   fmt_short(run.model.lateral_limit),
               run.model};
        c.model.kind = ModelKind::kUst;
        c.model.longitudinal_limit = limit;
        cells.push_back(c);
      }
      break;
  }
  std::ostringstream csv;
  csv << header << '\n';
  for (const Cell& cell : cells) {
    if (progress) *progress << "ablation " << to_string(axis) << " [" << cell.label << "]\n";
    Model model(cell.model, run.train.seed);
    train(model, data.train, data.val, run.train, progress);
    const std::vector<Sample> val = prepare_samples(data.val, model.config());
    EvalConfig top1;
    top1.mon_n = 1;
    const Evaluation ev = evaluate(model, val, top1);
    csv << cell.label << ',' << fmt_short(ev.report.ade) << ',' << fmt_short(ev.report.fde) << '\n';
  }
  ensure_dir(out);
  write_text(out / ("ablation_" + to_string(axis) + ".csv"), csv.str());
  return csv.str();
}

ActivationTables activation_tables(Model& model, std::span<const Scene> scenes, const ActivationConfig& config) {
  if (model.config().kind != ModelKind::kUst) throw ConfigError("activation analysis needs a ust model");
  const std::size_t hidden = model.config().hidden;
  for (std::size_t c : config.channels) {
    if (c >= hidden) {
      throw ConfigError("channel " + std::to_string(c) + " out of range [0, " + std::to_string(hidden) + ")");
    }
  }
  const std::vector<Sample> samples = prepare_samples(scenes, model.config());
  const FeatureSet& features = model.config().features;

  std::vector<double> vx, vy;
  for (const Sample& s : samples)
    for (const SpatioTemporalPoint& p : s.points.points)
      if (!p.is_target) {
        vx.push_back(p.vel.x);
        vy.push_back(p.vel.y);
      }
  const Vec2 vel{median(vx), median(vy)};

  const auto xs = axis_values(config.x1_min, config.x1_max, config.x1_step, "x1");
  const auto ys = axis_values(config.x2_min, config.x2_max, config.x2_step, "x2");
  const auto ts = axis_values(config.t_min, config.t_max, config.t_step, "t");
  std::vector<SpatioTemporalPoint> grid;
  grid.reserve(xs.size() * ys.size() * ts.size());
  for (double x : xs)
    for (double y : ys)
      for (double t : ts) grid.push_back(SpatioTemporalPoint{{x, y}, vel, AgentType::kVehicle, t, false, -1});

  std::ostringstream field;
  field << "channel,x1,x2,t,activation\n";
  std::vector<std::vector<double>> responses(config.channels.size(), std::vector<double>(grid.size()));
  constexpr std::size_t kChunk = 1024;
  for (std::size_t i = 0; i < grid.size(); i += kChunk) {
    const std::size_t n = std::min(grid.size(), i + kChunk) - i;
    std::vector<PointSet> sets(n);
    std::vector<const PointSet*> ptrs(n);
    for (std::size_t j = 0; j < n; ++j) {
      sets[j].points = {grid[i + j]};
      sets[j].features = features;
      sets[j].encoding = encode_points(sets[j].points, features);
      sets[j].mask = {true};
      ptrs[j] = &sets[j];
    }
    nn::Tape tape(false);
    EncoderTrace trace;
    batch_st_pooling(tape, ptrs, model.encoder(), Mode::kEval, &trace);
    const Tensor& emb = trace.embeddings.back().value();
    for (std::size_t c = 0; c < config.channels.size(); ++c)
      for (std::size_t j = 0; j < n; ++j) responses[c][i + j] = emb(j, config.channels[c]);
  }
  for (std::size_t c = 0; c < config.channels.size(); ++c)
    for (std::size_t g = 0; g < grid.size(); ++g)
      field << config.channels[c] << ',' << fmt_short(grid[g].pos.x) << ',' << fmt_short(grid[g].pos.y) << ','
            << fmt_short(grid[g].t) << ',' << fmt(responses[c][g]) << '\n';

  struct Hit {
    std::size_t scene;
    double value;
    const SpatioTemporalPoint* point;
  };
  std::vector<std::vector<Hit>> hits(config.channels.size());
  constexpr std::size_t kSceneChunk = 64;
  for (std::size_t i = 0; i < samples.size(); i += kSceneChunk) {
    std::vector<const Sample*> batch;
    for (std::size_t j = i; j < std::min(samples.size(), i + kSceneChunk); ++j) batch.push_back(&samples[j]);
    nn::Tape tape(false);
    EncoderTrace trace;
    const nn::Var ctx = model.encode(tape, batch, Mode::kEval, &trace);
    const ad::PoolResult& pool = trace.pools.back();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t c = 0; c < config.channels.size(); ++c) {
        const std::size_t ch = config.channels[c];
        const std::size_t row = pool.argmax[b * hidden + ch] - trace.offsets[b];
        hits[c].push_back({i + b, ctx.value()(b, ch), &batch[b]->points.points[row]});
      }
    }
  }
  std::ostringstream ranked;
  ranked << "channel,rank,scene,activation,agent_id,x1,x2,t\n";
  for (std::size_t c = 0; c < config.channels.size(); ++c) {
    std::stable_sort(hits[c].begin(), hits[c].end(), [](const Hit& a, const Hit& b) { return a.value > b.value; });
    for (std::size_t r = 0; r < hits[c].size(); ++r) {
      const Hit& h = hits[c][r];
      ranked << config.channels[c] << ',' << (r + 1) << ',' << h.scene << ',' << fmt(h.value) << ','
             << h.point->agent_id << ',' << fmt(h.point->pos.x) << ',' << fmt(h.point->pos.y) << ','
             << fmt(h.point->t) << '\n';
    }
  }
  return ActivationTables{field.str(), ranked.str()};
}

ActivationTables cmd_activations(const RunConfig& run, const fs::path& checkpoint, const fs::path& out,
                                 const std::string& data_override) {
  Model model = Model::from_checkpoint(load_checkpoint(checkpoint));
  RunConfig effective = run;
  effective.model = model.config();
  const std::vector<Scene> scenes = evaluation_scenes(effective, data_override);
  ActivationTables tables = activation_tables(model, scenes, run.activations);
  ensure_dir(out);
  write_text(out / "activation_field.csv", tables.field_csv);
  write_text(out / "activation_scenes.csv", tables.scenes_csv);
  return tables;
}

}  // namespace ust::app
