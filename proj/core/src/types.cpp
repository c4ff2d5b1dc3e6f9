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

#include "ust/types.hpp"

#include "ust/errors.hpp"

namespace ust {

std::string_view to_string(AgentType type) {
  switch (type) {
    case AgentType::kVehicle:
      return "vehicle";
    case AgentType::kPedestrian:
      return "pedestrian";
    case AgentType::kBicycle:
      return "bicycle";
    case AgentType::kUnknown:
      return "unknown";
  }
  return "unknown";
}

AgentType parse_agent_type(std::string_view name) {
  if (name == "vehicle") return AgentType::kVehicle;
  if (name == "pedestrian") return AgentType::kPedestrian;
  if (name == "bicycle") return AgentType::kBicycle;
  if (name == "unknown") return AgentType::kUnknown;
  throw DataError("unknown agent type '" + std::string(name) +
                  "' (expected vehicle, pedestrian, bicycle or unknown)");
}

Vec2 Frame::rotate_to_local(Vec2 v) const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 Frame::to_local(Vec2 p) const { return rotate_to_local(p - origin); }

Vec2 Frame::to_world(Vec2 p) const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return Vec2{c * p.x - s * p.y, s * p.x + c * p.y} + origin;
}

const Track& Scene::target() const {
  if (const Track* t = find(target_id)) return *t;
  throw DataError("scene has no track for target " + std::to_string(target_id));
}

const Track* Scene::find(int agent_id) const {
  for (const Track& t : tracks)
    if (t.agent_id == agent_id) return &t;
  return nullptr;
}

}  // namespace ust
