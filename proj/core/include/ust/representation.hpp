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
#include <string>
#include <vector>

#include "ust/tensor.hpp"
#include "ust/types.hpp"

namespace ust {

/// Which per-point features are encoded. The target flag is always kept.
struct FeatureSet {
  bool position = true;
  bool velocity = true;
  bool agent_type = true;
  bool time = true;

  std::size_t width() const;
  /// Comma-separated subset of {position, velocity, type, time}, or "all".
  static FeatureSet parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const FeatureSet&) const = default;
};

/// One agent snapshot in the unified (x1, x2, t) space.
struct SpatioTemporalPoint {
  Vec2 pos;
  Vec2 vel;
  AgentType type = AgentType::kUnknown;
  double t = 0.0;
  bool is_target = false;
  int agent_id = 0;
};

/// Unordered point set plus its row encoding. Row order carries no meaning.
struct PointSet {
  std::vector<SpatioTemporalPoint> points;
  Tensor encoding;         // [K x features.width()]
  std::vector<bool> mask;  // all true after construction
  FeatureSet features;

  std::size_t size() const { return points.size(); }
};

struct RepresentationConfig {
  FeatureSet features;
  bool align_heading = true;
  double history_horizon = 3.0;     // s
  double longitudinal_limit = 90.0; // m
  double lateral_limit = 15.0;      // m
};

/// Translates so the target's last observation before prediction time is the origin,
/// shifts time so prediction time is zero and optionally rotates the target's
/// last-observed heading onto +x. Future and truth are transformed too.
Scene to_reference_frame(const Scene& scene, bool align_heading = true);

/// Gap-aware finite-difference velocities, one per observation. Duplicate or
/// decreasing timestamps throw DataError.
std::vector<Vec2> derive_velocity(std::span<const Observation> track);

/// Encodes points in the fixed feature order: x(2), v(2), type one-hot(4), t(1), is_target(1),
/// restricted to the selected features.
Tensor encode_points(std::span<const SpatioTemporalPoint> points, const FeatureSet& features);

/// One point per observed (agent, timestamp) inside [-history_horizon, 0].
PointSet build_point_set(const Scene& framed_scene, const FeatureSet& features, double history_horizon = 3.0);

/// Drops neighbor points with |x1| > longitudinal_limit or |x2| > lateral_limit.
PointSet filter_range(const PointSet& ps, double longitudinal_limit, double lateral_limit);

/// Keeps rows whose `keep` bit is set, re-encoding accordingly.
PointSet subset(const PointSet& ps, const std::vector<bool>& keep);
PointSet target_only(const PointSet& ps);

/// to_reference_frame + build_point_set + filter_range.
PointSet prepare_point_set(const Scene& raw_scene, const RepresentationConfig& config);

}  // namespace ust
