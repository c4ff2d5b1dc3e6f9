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

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ust {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

enum class AgentType { kVehicle = 0, kPedestrian = 1, kBicycle = 2, kUnknown = 3 };
inline constexpr std::size_t kAgentTypeCount = 4;

std::string_view to_string(AgentType type);
/// Throws DataError for names outside {vehicle, pedestrian, bicycle, unknown}.
AgentType parse_agent_type(std::string_view name);

struct Observation {
  double t = 0.0;  // seconds
  Vec2 pos;        // meters
};

/// Ordered timestamped positions.
using Trajectory = std::vector<Observation>;

struct Track {
  int agent_id = 0;
  AgentType type = AgentType::kUnknown;
  std::vector<Observation> obs;
};

/// Rigid 2D transform into a target-centric frame: p' = R(-heading) (p - origin),
/// t' = t - time_origin.
struct Frame {
  Vec2 origin;
  double heading = 0.0;
  double time_origin = 0.0;

  Vec2 to_local(Vec2 p) const;
  Vec2 to_world(Vec2 p) const;
  Vec2 rotate_to_local(Vec2 v) const;
  Observation to_local(const Observation& o) const { return {o.t - time_origin, to_local(o.pos)}; }
  Observation to_world(const Observation& o) const { return {o.t + time_origin, to_world(o.pos)}; }
};

/// Generative facts kept alongside synthetic scenes for oracle checks.
struct SceneTruth {
  std::string kind;
  Vec2 target_velocity;          // world frame, at prediction time
  double brake_time = NAN;       // lead_brake: leader braking onset (s)
  double reaction_delay = NAN;   // lead_brake: follower delay (s)
  double deceleration = NAN;     // m/s^2
  int leader_id = -1;
  Trajectory noiseless_future;   // world frame
};

/// One prediction sample: multi-agent history plus the target's future.
struct Scene {
  int target_id = 0;
  std::vector<Track> tracks;  // history observations, target included
  Trajectory future;          // target ground truth over the horizon
  double prediction_time = 0.0;
  Frame frame;                // identity until to_reference_frame
  std::optional<SceneTruth> truth;

  const Track& target() const;
  const Track* find(int agent_id) const;
};

}  // namespace ust
