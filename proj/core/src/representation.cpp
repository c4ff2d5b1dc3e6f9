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

#include "ust/representation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ust/errors.hpp"

namespace ust {

namespace {

constexpr double kTimeTolerance = 1e-9;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Index of the last observation at or before t (or the first one if all are later).
std::size_t last_at_or_before(const std::vector<Observation>& obs, double t) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (obs[i].t <= t + kTimeTolerance) idx = i;
  return idx;
}

}  // namespace

std::size_t FeatureSet::width() const {
  return (position ? 2 : 0) + (velocity ? 2 : 0) + (agent_type ? kAgentTypeCount : 0) + (time ? 1 : 0) + 1;
}

FeatureSet FeatureSet::parse(const std::string& text) {
  if (trim(text) == "all") return FeatureSet{};
  FeatureSet f{false, false, false, false};
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "position" || item == "pos") {
      f.position = true;
    } else if (item == "velocity" || item == "vel") {
      f.velocity = true;
    } else if (item == "type") {
      f.agent_type = true;
    } else if (item == "time") {
      f.time = true;
    } else if (!item.empty()) {
      throw ConfigError("unknown feature '" + item + "' (expected position, velocity, type, time)");
    }
  }
  return f;
}

std::string FeatureSet::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(position, "position");
  add(velocity, "velocity");
  add(agent_type, "type");
  add(time, "time");
  return out.empty() ? "target_flag" : out;
}

std::vector<Vec2> derive_velocity(std::span<const Observation> track) {
  std::vector<Vec2> v(track.size());
  for (std::size_t i = 1; i < track.size(); ++i) {
    const double dt = track[i].t - track[i - 1].t;
    if (!(dt > 0.0)) {
      throw DataError("track timestamps must strictly increase (t=" + std::to_string(track[i - 1].t) +
                      " then t=" + std::to_string(track[i].t) + ")");
    }
    v[i] = (track[i].pos - track[i - 1].pos) * (1.0 / dt);
  }
  if (track.size() >= 2) v[0] = v[1];
  return v;
}

Scene to_reference_frame(const Scene& scene, bool align_heading) {
  const Track& target = scene.target();
  if (target.obs.empty()) throw DataError("target " + std::to_string(scene.target_id) + " has no observations");
  const std::size_t last = last_at_or_before(target.obs, scene.prediction_time);

  Frame local;
  local.origin = target.obs[last].pos;
  local.time_origin = scene.prediction_time;
  if (align_heading) {
    // Heading of the latest non-zero displacement up to the last observation.
    for (std::size_t i = last; i > 0; --i) {
      const Vec2 d = target.obs[i].pos - target.obs[i - 1].pos;
      if (d.squared_norm() > 0.0) {
        local.heading = std::atan2(d.y, d.x);
        break;
      }
    }
  }

  Scene out;
  out.target_id = scene.target_id;
  out.prediction_time = 0.0;
  out.truth = scene.truth;
  out.tracks.reserve(scene.tracks.size());
  for (const Track& t : scene.tracks) {
    Track lt{t.agent_id, t.type, {}};
    lt.obs.reserve(t.obs.size());
    for (const Observation& o : t.obs) lt.obs.push_back(local.to_local(o));
    out.tracks.push_back(std::move(lt));
  }
  for (const Observation& o : scene.future) out.future.push_back(local.to_local(o));
  if (out.truth) {
    out.truth->target_velocity = local.rotate_to_local(out.truth->target_velocity);
    for (Observation& o : out.truth->noiseless_future) o = local.to_local(o);
  }
  // Compose with any frame already applied so to_world always maps back to the source.
  Frame composed;
  composed.heading = scene.frame.heading + local.heading;
  composed.origin = scene.frame.to_world(local.origin);
  composed.time_origin = scene.frame.time_origin + local.time_origin;
  out.frame = composed;
  return out;
}

Tensor encode_points(std::span<const SpatioTemporalPoint> points, const FeatureSet& features) {
  Tensor enc = Tensor::matrix(points.size(), features.width());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const SpatioTemporalPoint& p = points[k];
    auto row = enc.row(k);
    std::size_t c = 0;
    if (features.position) {
      row[c++] = p.pos.x;
      row[c++] = p.pos.y;
    }
    if (features.velocity) {
      row[c++] = p.vel.x;
      row[c++] = p.vel.y;
    }
    if (features.agent_type) {
      for (std::size_t j = 0; j < kAgentTypeCount; ++j) row[c + j] = 0.0;
      row[c + static_cast<std::size_t>(p.type)] = 1.0;
      c += kAgentTypeCount;
    }
    if (features.time) row[c++] = p.t;
    row[c] = p.is_target ? 1.0 : 0.0;
  }
  return enc;
}

PointSet build_point_set(const Scene& scene, const FeatureSet& features, double history_horizon) {
  PointSet ps;
  ps.features = features;
  bool target_seen = false;
  for (const Track& track : scene.tracks) {
    if (track.obs.empty()) continue;
    const std::vector<Vec2> vel = derive_velocity(track.obs);
    const bool is_target = track.agent_id == scene.target_id;
    for (std::size_t i = 0; i < track.obs.size(); ++i) {
      const Observation& o = track.obs[i];
      if (o.t < -history_horizon - kTimeTolerance || o.t > kTimeTolerance) continue;
      ps.points.push_back(SpatioTemporalPoint{o.pos, vel[i], track.type, o.t, is_target, track.agent_id});
      target_seen = target_seen || is_target;
    }
  }
  if (!target_seen) {
    throw DataError("scene for target " + std::to_string(scene.target_id) +
                    " has no target observations in the history window");
  }
  ps.encoding = encode_points(ps.points, features);
  ps.mask.assign(ps.points.size(), true);
  return ps;
}

PointSet subset(const PointSet& ps, const std::vector<bool>& keep) {
  PointSet out;
  out.features = ps.features;
  for (std::size_t k = 0; k < ps.points.size(); ++k)
    if (keep[k]) out.points.push_back(ps.points[k]);
  out.encoding = encode_points(out.points, out.features);
  out.mask.assign(out.points.size(), true);
  return out;
}

PointSet filter_range(const PointSet& ps, double longitudinal_limit, double lateral_limit) {
  std::vector<bool> keep(ps.points.size());
  for (std::size_t k = 0; k < ps.points.size(); ++k) {
    const SpatioTemporalPoint& p = ps.points[k];
    keep[k] = p.is_target || (std::abs(p.pos.x) <= longitudinal_limit && std::abs(p.pos.y) <= lateral_limit);
  }
  return subset(ps, keep);
}

PointSet target_only(const PointSet& ps) {
  std::vector<bool> keep(ps.points.size());
  for (std::size_t k = 0; k < ps.points.size(); ++k) keep[k] = ps.points[k].is_target;
  return subset(ps, keep);
}

PointSet prepare_point_set(const Scene& raw_scene, const RepresentationConfig& config) {
  const Scene framed = to_reference_frame(raw_scene, config.align_heading);
  return filter_range(build_point_set(framed, config.features, config.history_horizon), config.longitudinal_limit,
                      config.lateral_limit);
}

}  // namespace ust
