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

#include "ust/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "ust/errors.hpp"
#include "ust/kv.hpp"

namespace ust::data {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fmt(double v) { return kv::from_double(v); }

// ---- synthetic motion --------------------------------------------------------

// Straight-line motion along `dir` with optional braking from `brake_start` at `decel`
// until standstill. `origin` is the position at t = 0.
struct Mover {
  Vec2 origin;
  Vec2 dir{1.0, 0.0};
  double speed = 0.0;
  double brake_start = kInf;
  double decel = 0.0;

  // Signed path length relative to the braking onset.
  double path(double t) const {
    if (t <= brake_start) return speed * (t - brake_start);
    const double stop = speed / decel;
    const double tau = std::min(t - brake_start, stop);
    return speed * tau - 0.5 * decel * tau * tau;
  }

  double distance(double t) const {
    if (!std::isfinite(brake_start) || decel <= 0.0) return speed * t;
    return path(t) - path(0.0);
  }

  Vec2 at(double t) const { return origin + dir * distance(t); }

  double speed_at(double t) const {
    if (t <= brake_start || decel <= 0.0) return speed;
    return std::max(0.0, speed - decel * (t - brake_start));
  }
};

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

struct AgentSpec {
  int id = 0;
  AgentType type = AgentType::kVehicle;
  Mover motion;
};

class SceneBuilder {
 public:
  SceneBuilder(const ScenarioConfig& cfg, std::mt19937_64& rng) : cfg_(cfg), rng_(rng) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::size_t agent_count(std::size_t minimum) {
    const std::size_t lo = std::max(cfg_.n_agents_min, minimum);
    const std::size_t hi = std::max(cfg_.n_agents_max, lo);
    return lo + pick(hi - lo + 1);
  }

  AgentType random_type() {
    const double u = uniform(0.0, 1.0);
    if (u < 0.5) return AgentType::kVehicle;
    if (u < 0.75) return AgentType::kPedestrian;
    return AgentType::kBicycle;
  }

  double random_speed(AgentType type) {
    switch (type) {
      case AgentType::kPedestrian:
        return uniform(0.5, 2.0);
      case AgentType::kBicycle:
        return uniform(2.0, 6.0);
      default:
        return uniform(4.0, 12.0);
    }
  }

  double lane_offset(AgentType type) {
    static constexpr double kVehicleLanes[] = {-7.0, -3.5, 0.0, 3.5, 7.0};
    switch (type) {
      case AgentType::kPedestrian:
        return coin(0.5) ? 9.0 : -9.0;
      case AgentType::kBicycle:
        return coin(0.5) ? 5.25 : -5.25;
      default:
        return kVehicleLanes[pick(5)];
    }
  }

  // Background traffic along the road through `anchor` with heading `road`.
  AgentSpec background(int id, Vec2 anchor, double road, AgentType type) {
    const double lateral = lane_offset(type);
    const Vec2 along = unit(road);
    const Vec2 left = unit(road + std::numbers::pi / 2.0);
    AgentSpec a;
    a.id = id;
    a.type = type;
    a.motion.origin = anchor + along * uniform(-40.0, 60.0) + left * lateral;
    const bool oncoming = type == AgentType::kVehicle ? lateral > 0.0 : coin(0.5);
    a.motion.dir = unit(road + (oncoming ? std::numbers::pi : 0.0) + uniform(-0.05, 0.05));
    a.motion.speed = random_speed(type);
    return a;
  }

  Scene assemble(const std::vector<AgentSpec>& agents, SceneTruth truth) {
    Scene scene;
    scene.target_id = agents.front().id;
    scene.prediction_time = 0.0;
    std::normal_distribution<double> noise(0.0, cfg_.noise_sigma > 0.0 ? cfg_.noise_sigma : 1.0);
    auto observe = [&](Vec2 p) {
      if (cfg_.noise_sigma > 0.0) return Vec2{p.x + noise(rng_), p.y + noise(rng_)};
      return p;
    };
    const auto h = static_cast<int>(cfg_.history_steps);
    for (const AgentSpec& a : agents) {
      Track track{a.id, a.type, {}};
      for (int k = -h; k <= 0; ++k) {
        const double t = cfg_.dt * k;
        track.obs.push_back({t, observe(a.motion.at(t))});
      }
      scene.tracks.push_back(std::move(track));
    }
    const Mover& target = agents.front().motion;
    for (std::size_t k = 1; k <= cfg_.future_steps; ++k) {
      const double t = cfg_.dt * static_cast<double>(k);
      scene.future.push_back({t, observe(target.at(t))});
      truth.noiseless_future.push_back({t, target.at(t)});
    }
    truth.target_velocity = target.dir * target.speed_at(0.0);
    scene.truth = std::move(truth);
    return scene;
  }

 private:
  const ScenarioConfig& cfg_;
  std::mt19937_64& rng_;
};

Scene make_constant_velocity(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  SceneBuilder b(cfg, rng);
  const double road = b.uniform(-std::numbers::pi, std::numbers::pi);
  const Vec2 anchor{b.uniform(-100.0, 100.0), b.uniform(-100.0, 100.0)};
  const std::size_t n = b.agent_count(1);
  std::vector<AgentSpec> agents;
  AgentSpec target = b.background(0, anchor, road, b.random_type());
  target.motion.origin = anchor + unit(road + std::numbers::pi / 2.0) * b.lane_offset(target.type);
  agents.push_back(target);
  for (std::size_t i = 1; i < n; ++i) agents.push_back(b.background(static_cast<int>(i), anchor, road, b.random_type()));
  SceneTruth truth;
  truth.kind = "constant_velocity";
  return b.assemble(agents, std::move(truth));
}

Scene make_lead_brake(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  SceneBuilder b(cfg, rng);
  const double road = b.uniform(-std::numbers::pi, std::numbers::pi);
  const Vec2 along = unit(road);
  const Vec2 anchor{b.uniform(-100.0, 100.0), b.uniform(-100.0, 100.0)};
  const double speed = b.uniform(8.0, 15.0);
  const double gap = b.uniform(15.0, 30.0);
  const double brake_time = b.uniform(-1.5, 0.0);
  const double delay = b.uniform(0.5, 1.0);
  const double decel = b.uniform(2.0, 5.0);

  AgentSpec follower;
  follower.id = 0;
  follower.type = AgentType::kVehicle;
  follower.motion = Mover{anchor, along, speed, brake_time + delay, decel};
  AgentSpec leader;
  leader.id = 1;
  leader.type = AgentType::kVehicle;
  leader.motion = Mover{anchor + along * gap, along, speed, brake_time, decel};

  std::vector<AgentSpec> agents{follower, leader};
  const std::size_t n = b.agent_count(2);
  for (std::size_t i = 2; i < n; ++i) {
    AgentSpec a = b.background(static_cast<int>(i), anchor, road, AgentType::kVehicle);
    // Keep background traffic out of the follower's lane.
    if (std::abs((a.motion.origin - anchor).x * -along.y + (a.motion.origin - anchor).y * along.x) < 1.0) {
      a.motion.origin += unit(road + std::numbers::pi / 2.0) * 3.5;
    }
    agents.push_back(a);
  }
  SceneTruth truth;
  truth.kind = "lead_brake";
  truth.brake_time = brake_time;
  truth.reaction_delay = delay;
  truth.deceleration = decel;
  truth.leader_id = 1;
  return b.assemble(agents, std::move(truth));
}

Scene make_crossing(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  SceneBuilder b(cfg, rng);
  const double road = b.uniform(-std::numbers::pi, std::numbers::pi);
  const Vec2 anchor{b.uniform(-100.0, 100.0), b.uniform(-100.0, 100.0)};
  const double speed_a = b.uniform(6.0, 12.0);
  const double arrive_a = b.uniform(1.5, 3.5);
  const Vec2 conflict = anchor + unit(road) * (speed_a * arrive_a);
  const double cross_heading = road + (b.coin(0.5) ? 1.0 : -1.0) * std::numbers::pi / 2.0;
  const double speed_b = b.uniform(5.0, 10.0);
  const double arrive_b = arrive_a + b.uniform(-1.0, 1.0);
  const double onset = b.uniform(-1.0, 0.5);
  const double decel = b.uniform(2.0, 4.0);
  const bool target_yields = arrive_a > arrive_b;

  AgentSpec target;
  target.id = 0;
  target.type = AgentType::kVehicle;
  target.motion = Mover{anchor, unit(road), speed_a, target_yields ? onset : kInf, target_yields ? decel : 0.0};
  AgentSpec crosser;
  crosser.id = 1;
  crosser.type = b.coin(0.5) ? AgentType::kVehicle : AgentType::kBicycle;
  crosser.motion = Mover{conflict - unit(cross_heading) * (speed_b * arrive_b), unit(cross_heading), speed_b,
                         target_yields ? kInf : onset, target_yields ? 0.0 : decel};
  std::vector<AgentSpec> agents{target, crosser};
  const std::size_t n = b.agent_count(2);
  for (std::size_t i = 2; i < n; ++i) agents.push_back(b.background(static_cast<int>(i), anchor, road, b.random_type()));
  SceneTruth truth;
  truth.kind = "crossing";
  truth.brake_time = onset;
  truth.deceleration = target_yields ? decel : 0.0;
  truth.leader_id = 1;
  return b.assemble(agents, std::move(truth));
}

std::mt19937_64 scene_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

// ---- CSV ---------------------------------------------------------------------

std::vector<Track> parse_csv(std::istream& is, const std::string& source_name) {
  std::string line;
  if (!std::getline(is, line)) throw DataError(source_name + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw DataError(source_name + ": header must be '" + std::string(kCsvHeader) + "', got '" + line + "'");
  }
  struct Row {
    std::int64_t frame;
    double t;
    std::size_t line;
  };
  std::map<int, Track> tracks;
  std::map<int, std::vector<Row>> rows;
  std::set<std::pair<std::int64_t, int>> seen;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (fields.size() != 6) {
      throw DataError(where + ": expected 6 columns, found " + std::to_string(fields.size()));
    }
    std::int64_t frame = 0;
    int agent = 0;
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    try {
      std::size_t used = 0;
      frame = std::stoll(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("frame_id");
      agent = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("agent_id");
      t = std::stod(fields[1]);
      x = std::stod(fields[4]);
      y = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw DataError(where + ": malformed row '" + line + "'");
    }
    if (!std::isfinite(t) || !std::isfinite(x) || !std::isfinite(y)) throw DataError(where + ": non-finite value");
    AgentType type;
    try {
      type = parse_agent_type(fields[3]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!seen.emplace(frame, agent).second) {
      throw DataError(where + ": duplicate (frame_id, agent_id) = (" + std::to_string(frame) + ", " +
                      std::to_string(agent) + ")");
    }
    auto [it, inserted] = tracks.try_emplace(agent, Track{agent, type, {}});
    if (!inserted && it->second.type != type) {
      throw DataError(where + ": agent " + std::to_string(agent) + " changes type");
    }
    it->second.obs.push_back({t, {x, y}});
    rows[agent].push_back({frame, t, line_no});
  }
  std::vector<Track> out;
  out.reserve(tracks.size());
  for (auto& [id, track] : tracks) {
    auto& r = rows[id];
    std::vector<std::size_t> order(r.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a].frame < r[b].frame; });
    std::vector<Observation> sorted;
    sorted.reserve(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k > 0 && !(r[order[k]].t > r[order[k - 1]].t)) {
        throw DataError(source_name + ":" + std::to_string(r[order[k]].line) + ": timestamps of agent " +
                        std::to_string(id) + " do not increase with frame_id");
      }
      sorted.push_back(track.obs[order[k]]);
    }
    track.obs = std::move(sorted);
    out.push_back(std::move(track));
  }
  return out;
}

std::vector<Track> parse_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return parse_csv(is, path.string());
}

void write_csv(std::ostream& os, std::span<const Track> tracks) {
  std::vector<double> times;
  for (const Track& t : tracks)
    for (const Observation& o : t.obs) times.push_back(o.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  struct Line {
    std::size_t frame;
    int agent;
    std::string text;
  };
  std::vector<Line> lines;
  for (const Track& t : tracks) {
    for (const Observation& o : t.obs) {
      const auto frame = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), o.t) - times.begin());
      lines.push_back({frame, t.agent_id,
                       std::to_string(frame) + ',' + fmt(o.t) + ',' + std::to_string(t.agent_id) + ',' +
                           std::string(to_string(t.type)) + ',' + fmt(o.pos.x) + ',' + fmt(o.pos.y)});
    }
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) { return a.frame != b.frame ? a.frame < b.frame : a.agent < b.agent; });
  os << kCsvHeader << '\n';
  for (const Line& l : lines) os << l.text << '\n';
}

// ---- windows -------------------------------------------------------------------

std::vector<Scene> scenes_from_tracks(std::span<const Track> tracks, const WindowConfig& window) {
  if (!(window.dt > 0.0) || window.future_steps == 0 || window.history_steps == 0 || window.stride == 0) {
    throw ConfigError("window needs dt > 0 and history_steps, future_steps, stride >= 1");
  }
  double t0 = kInf;
  double t1 = -kInf;
  for (const Track& t : tracks)
    for (const Observation& o : t.obs) {
      t0 = std::min(t0, o.t);
      t1 = std::max(t1, o.t);
    }
  std::vector<Scene> scenes;
  if (!std::isfinite(t0)) return scenes;
  auto frame_of = [&](double t) { return static_cast<std::int64_t>(std::llround((t - t0) / window.dt)); };
  const std::int64_t n_frames = frame_of(t1) + 1;
  const auto win = static_cast<std::int64_t>(window.window_frames());
  const auto hist = static_cast<std::int64_t>(window.history_steps);
  const auto fut = static_cast<std::int64_t>(window.future_steps);

  for (std::int64_t start = 0; start + win <= n_frames; start += static_cast<std::int64_t>(window.stride)) {
    const std::int64_t pred = start + hist;
    std::vector<Track> history;
    std::vector<std::pair<int, Trajectory>> futures;
    for (const Track& t : tracks) {
      Track h{t.agent_id, t.type, {}};
      Trajectory f;
      std::set<std::int64_t> future_frames;
      for (const Observation& o : t.obs) {
        const std::int64_t fr = frame_of(o.t);
        if (fr >= start && fr <= pred) h.obs.push_back(o);
        if (fr > pred && fr <= pred + fut) {
          f.push_back(o);
          future_frames.insert(fr);
        }
      }
      if (!h.obs.empty()) history.push_back(std::move(h));
      if (history.empty() || history.back().agent_id != t.agent_id) continue;
      if (history.back().obs.size() >= 2 && static_cast<std::int64_t>(future_frames.size()) == fut &&
          f.size() == future_frames.size()) {
        futures.emplace_back(t.agent_id, std::move(f));
      }
    }
    for (auto& [target, future] : futures) {
      Scene s;
      s.target_id = target;
      s.tracks = history;
      s.future = std::move(future);
      s.prediction_time = t0 + static_cast<double>(pred) * window.dt;
      scenes.push_back(std::move(s));
    }
  }
  return scenes;
}

std::vector<Track> scene_to_tracks(const Scene& scene) {
  double t_min = kInf;
  for (const Track& t : scene.tracks)
    for (const Observation& o : t.obs) t_min = std::min(t_min, o.t);
  for (const Observation& o : scene.future) t_min = std::min(t_min, o.t);
  std::vector<Track> out;
  for (const Track& t : scene.tracks) {
    Track c{t.agent_id, t.type, {}};
    for (const Observation& o : t.obs) c.obs.push_back({o.t - t_min, o.pos});
    if (t.agent_id == scene.target_id)
      for (const Observation& o : scene.future) c.obs.push_back({o.t - t_min, o.pos});
    out.push_back(std::move(c));
  }
  return out;
}

// ---- scenarios -----------------------------------------------------------------

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kConstantVelocity:
      return "constant_velocity";
    case ScenarioKind::kLeadBrake:
      return "lead_brake";
    case ScenarioKind::kCrossing:
      return "crossing";
    case ScenarioKind::kDropout:
      return "dropout";
  }
  return "constant_velocity";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "constant_velocity") return ScenarioKind::kConstantVelocity;
  if (name == "lead_brake") return ScenarioKind::kLeadBrake;
  if (name == "crossing") return ScenarioKind::kCrossing;
  if (name == "dropout") return ScenarioKind::kDropout;
  throw ConfigError("unknown scenario kind '" + name +
                    "' (valid kinds: constant_velocity, lead_brake, crossing, dropout)");
}

void ScenarioConfig::validate() const {
  if (base_kind == ScenarioKind::kDropout) throw ConfigError("base_kind cannot be dropout");
  if (n_agents_min < 1 || n_agents_max < n_agents_min) throw ConfigError("need 1 <= n_agents_min <= n_agents_max");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (history_steps < 1 || future_steps < 1) throw ConfigError("history_steps and future_steps must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (dropout_rate < 0.0 || dropout_rate > 1.0) throw ConfigError("dropout_rate must be in [0, 1]");
  if (target_dropout_rate < 0.0 || target_dropout_rate > 1.0) {
    throw ConfigError("target_dropout_rate must be in [0, 1]");
  }
}

ScenarioConfig ScenarioConfig::from_map(const std::map<std::string, std::string>& kv) {
  ScenarioConfig c;
  bool dropout_given = false;
  for (const auto& [k, v] : kv) {
    if (k == "kind") {
      c.kind = parse_scenario_kind(v);
    } else if (k == "base_kind") {
      c.base_kind = parse_scenario_kind(v);
    } else if (k == "n_scenes") {
      c.n_scenes = kv::to_size(k, v);
    } else if (k == "n_agents") {
      const auto dash = v.find('-');
      if (dash == std::string::npos) {
        c.n_agents_min = c.n_agents_max = kv::to_size(k, v);
      } else {
        c.n_agents_min = kv::to_size(k, v.substr(0, dash));
        c.n_agents_max = kv::to_size(k, v.substr(dash + 1));
      }
    } else if (k == "n_agents_min") {
      c.n_agents_min = kv::to_size(k, v);
    } else if (k == "n_agents_max") {
      c.n_agents_max = kv::to_size(k, v);
    } else if (k == "dt") {
      c.dt = kv::to_double(k, v);
    } else if (k == "history_steps") {
      c.history_steps = kv::to_size(k, v);
    } else if (k == "future_steps") {
      c.future_steps = kv::to_size(k, v);
    } else if (k == "noise_sigma") {
      c.noise_sigma = kv::to_double(k, v);
    } else if (k == "dropout_rate") {
      c.dropout_rate = kv::to_double(k, v);
      dropout_given = true;
    } else if (k == "target_dropout_rate") {
      c.target_dropout_rate = kv::to_double(k, v);
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(kv::to_int(k, v));
    } else {
      throw ConfigError("unknown scenario key '" + k + "'");
    }
  }
  if (c.kind == ScenarioKind::kDropout && !dropout_given) c.dropout_rate = 0.3;
  c.validate();
  return c;
}

std::map<std::string, std::string> ScenarioConfig::to_map() const {
  return {{"kind", to_string(kind)},
          {"base_kind", to_string(base_kind)},
          {"n_scenes", std::to_string(n_scenes)},
          {"n_agents", std::to_string(n_agents_min) + "-" + std::to_string(n_agents_max)},
          {"dt", fmt(dt)},
          {"history_steps", std::to_string(history_steps)},
          {"future_steps", std::to_string(future_steps)},
          {"noise_sigma", fmt(noise_sigma)},
          {"dropout_rate", fmt(dropout_rate)},
          {"target_dropout_rate", fmt(target_dropout_rate)},
          {"seed", std::to_string(seed)}};
}

WindowConfig ScenarioConfig::window() const {
  return WindowConfig{dt, history_steps, future_steps, future_steps};
}

void apply_dropout(Scene& scene, double neighbor_rate, double target_rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Track& t : scene.tracks) {
    std::vector<Observation> kept;
    if (t.agent_id == scene.target_id) {
      const std::size_t n = t.obs.size();
      std::size_t remaining = n;
      for (std::size_t i = 0; i < n; ++i) {
        const bool pinned = i == 0 || i + 1 == n;
        if (!pinned && remaining > 2 && target_rate > 0.0 && u(rng) < target_rate) {
          --remaining;
          continue;
        }
        kept.push_back(t.obs[i]);
      }
    } else {
      for (const Observation& o : t.obs)
        if (!(neighbor_rate > 0.0 && u(rng) < neighbor_rate)) kept.push_back(o);
    }
    t.obs = std::move(kept);
  }
  std::erase_if(scene.tracks, [&](const Track& t) { return t.obs.empty() && t.agent_id != scene.target_id; });
}

std::vector<Scene> generate_synthetic(const ScenarioConfig& cfg) {
  cfg.validate();
  const ScenarioKind kind = cfg.kind == ScenarioKind::kDropout ? cfg.base_kind : cfg.kind;
  std::vector<Scene> scenes;
  scenes.reserve(cfg.n_scenes);
  for (std::size_t i = 0; i < cfg.n_scenes; ++i) {
    std::mt19937_64 rng = scene_rng(cfg.seed, i, 0);
    Scene s;
    switch (kind) {
      case ScenarioKind::kLeadBrake:
        s = make_lead_brake(cfg, rng);
        break;
      case ScenarioKind::kCrossing:
        s = make_crossing(cfg, rng);
        break;
      default:
        s = make_constant_velocity(cfg, rng);
        break;
    }
    if (cfg.dropout_rate > 0.0 || cfg.target_dropout_rate > 0.0) {
      std::mt19937_64 drop_rng = scene_rng(cfg.seed, i, 1);
      apply_dropout(s, cfg.dropout_rate, cfg.target_dropout_rate, drop_rng);
    }
    if (s.truth) s.truth->kind = to_string(cfg.kind);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

// ---- splitting -----------------------------------------------------------------

Split split_indices(std::size_t n, double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must be in [0, 1)");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
  s.val.assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
  return s;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::span<const std::size_t> train, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order(train.begin(), train.end());
  std::mt19937_64 rng = scene_rng(seed, epoch, 2);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  return batches;
}

std::vector<Scene> load_scenes(const std::filesystem::path& path, const WindowConfig& window) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else if (std::filesystem::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw DataError("data path " + path.string() + " does not exist");
  }
  std::vector<Scene> scenes;
  for (const auto& f : files) {
    const auto tracks = parse_csv(f);
    auto s = scenes_from_tracks(tracks, window);
    std::move(s.begin(), s.end(), std::back_inserter(scenes));
  }
  return scenes;
}

}  // namespace ust::data
