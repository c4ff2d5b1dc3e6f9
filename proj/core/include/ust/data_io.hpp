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
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ust/types.hpp"

namespace ust::data {

inline constexpr const char* kCsvHeader = "frame_id,timestamp,agent_id,agent_type,x,y";

/// Tracks grouped by agent_id (ascending), observations sorted by timestamp.
std::vector<Track> parse_csv(std::istream& is, const std::string& source_name = "<stream>");
std::vector<Track> parse_csv(const std::filesystem::path& path);

/// Frame ids are the rank of each timestamp among all distinct timestamps.
void write_csv(std::ostream& os, std::span<const Track> tracks);

struct WindowConfig {
  double dt = 0.5;
  std::size_t history_steps = 6;  // frames at -history_steps*dt .. 0
  std::size_t future_steps = 6;
  std::size_t stride = 6;

  std::size_t window_frames() const { return history_steps + 1 + future_steps; }
  double history_horizon() const { return dt * static_cast<double>(history_steps); }
};

/// Sliding windows over the distinct timestamps. Every agent with >= 2 history
/// observations and one observation per future frame becomes the target of a scene;
/// all agents observed in the history part are kept with whatever they have.
std::vector<Scene> scenes_from_tracks(std::span<const Track> tracks, const WindowConfig& window);

/// Tracks of a scene as written to CSV: the target's history plus future, neighbors'
/// history only. Timestamps are shifted so the earliest is zero.
std::vector<Track> scene_to_tracks(const Scene& scene);

enum class ScenarioKind { kConstantVelocity, kLeadBrake, kCrossing, kDropout };

std::string to_string(ScenarioKind kind);
/// Throws ConfigError listing the valid kinds.
ScenarioKind parse_scenario_kind(const std::string& name);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kConstantVelocity;
  ScenarioKind base_kind = ScenarioKind::kLeadBrake;  // generator used by kDropout
  std::size_t n_scenes = 512;
  std::size_t n_agents_min = 2;
  std::size_t n_agents_max = 8;
  double dt = 0.5;
  std::size_t history_steps = 6;
  std::size_t future_steps = 6;
  double noise_sigma = 0.0;
  double dropout_rate = 0.0;         // per neighbor observation
  double target_dropout_rate = 0.0;  // per target history observation, keeps the first and last
  std::uint64_t seed = 0;

  void validate() const;
  /// Reads flat key=value pairs; unknown keys are a ConfigError.
  static ScenarioConfig from_map(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_map() const;
  WindowConfig window() const;
};

/// Deterministic in (config, scene index). Scenes are in the world frame with the
/// prediction time at t = 0 and carry their generative truth.
std::vector<Scene> generate_synthetic(const ScenarioConfig& config);

/// Bernoulli removal of neighbor observations (and optionally target history
/// observations, always keeping the first and the last). Neighbors left empty are removed.
void apply_dropout(Scene& scene, double neighbor_rate, double target_rate, std::mt19937_64& rng);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded shuffle, then the last round(val_fraction * n) indices go to validation.
Split split_indices(std::size_t n, double val_fraction, std::uint64_t seed);

/// Train batches for one epoch, reshuffled per (seed, epoch). The last batch may be partial.
std::vector<std::vector<std::size_t>> epoch_batches(std::span<const std::size_t> train, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch);

/// Loads every *.csv under a directory (sorted by name) or a single CSV file.
std::vector<Scene> load_scenes(const std::filesystem::path& path, const WindowConfig& window);

}  // namespace ust::data
