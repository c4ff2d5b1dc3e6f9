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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "scene_builders.hpp"
#include "ust/data_io.hpp"
#include "ust/errors.hpp"

namespace ust {
namespace {

using data::parse_csv;

std::vector<Track> parse_text(const std::string& body) {
  std::istringstream is(std::string(data::kCsvHeader) + "\n" + body);
  return parse_csv(is, "test.csv");
}

std::string error_of(const std::string& body) {
  try {
    parse_text(body);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

TEST(ParseCsv, HeaderOnlyIsEmpty) { EXPECT_TRUE(parse_text("").empty()); }

TEST(ParseCsv, GroupsAndSortsTracks) {
  const auto tracks = parse_text(
      "2,1.0,7,vehicle,2,0\n0,0.0,7,vehicle,0,0\n1,0.5,7,vehicle,1,0\n"
      "0,0.0,3,pedestrian,5,5\n1,0.5,3,pedestrian,5,6\n2,1.0,3,pedestrian,5,7\n");
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].agent_id, 3);
  EXPECT_EQ(tracks[0].type, AgentType::kPedestrian);
  EXPECT_EQ(tracks[1].agent_id, 7);
  ASSERT_EQ(tracks[1].obs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(tracks[1].obs[i].pos.x, double(i));
}

TEST(ParseCsv, ErrorsNameTheLine) {
  EXPECT_NE(error_of("0,0.0,1,vehicle,0,0\n0,0.0,1,vehicle,1,1\n").find("test.csv:3"), std::string::npos);
  EXPECT_NE(error_of("0,0.0,1,vehicle,0,0\n0,0.0,1,vehicle,1,1\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("0,0.0,1,vehicle,0\n").find("test.csv:2"), std::string::npos);
  EXPECT_NE(error_of("0,0.0,1,vehicle,0,abc\n").find("test.csv:2"), std::string::npos);
  EXPECT_NE(error_of("0,0.0,1,truck,0,0\n").find("test.csv:2"), std::string::npos);
  EXPECT_NE(error_of("0,0.0,1,vehicle,nan,0\n").find("non-finite"), std::string::npos);
  EXPECT_FALSE(error_of("0,1.0,1,vehicle,0,0\n1,0.5,1,vehicle,1,0\n").empty());
  EXPECT_FALSE(error_of("0,0.0,1,vehicle,0,0\n1,0.5,1,bicycle,1,0\n").empty());
  std::istringstream bad_header("frame,timestamp,agent_id,agent_type,x,y\n");
  EXPECT_THROW(parse_csv(bad_header), DataError);
}

TEST(WriteCsv, RoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  std::vector<Track> tracks;
  for (int a = 0; a < 5; ++a) {
    Track t{a * 3 + 1, static_cast<AgentType>(a % 4), {}};
    for (int k = 0; k < 8; ++k)
      if (rng() % 4) t.obs.push_back({0.1 * k + 0.05 * a, {u(rng), u(rng)}});
    if (t.obs.empty()) t.obs.push_back({0.0, {u(rng), u(rng)}});
    tracks.push_back(t);
  }
  std::ostringstream os;
  data::write_csv(os, tracks);
  std::istringstream is(os.str());
  const auto back = parse_csv(is);
  ASSERT_EQ(back.size(), tracks.size());
  for (std::size_t a = 0; a < tracks.size(); ++a) {
    EXPECT_EQ(back[a].agent_id, tracks[a].agent_id);
    EXPECT_EQ(back[a].type, tracks[a].type);
    ASSERT_EQ(back[a].obs.size(), tracks[a].obs.size());
    for (std::size_t i = 0; i < tracks[a].obs.size(); ++i) {
      EXPECT_NEAR(back[a].obs[i].pos.x, tracks[a].obs[i].pos.x, 1e-9);
      EXPECT_NEAR(back[a].obs[i].pos.y, tracks[a].obs[i].pos.y, 1e-9);
      EXPECT_NEAR(back[a].obs[i].t, tracks[a].obs[i].t, 1e-12);
    }
  }
}

std::vector<Track> uniform_tracks(std::size_t agents, std::size_t frames) {
  std::vector<Track> out;
  for (std::size_t a = 0; a < agents; ++a) {
    Track t{int(a), AgentType::kVehicle, {}};
    for (std::size_t f = 0; f < frames; ++f) t.obs.push_back({0.5 * double(f), {double(f), double(a)}});
    out.push_back(t);
  }
  return out;
}

TEST(ScenesFromTracks, ExactWindowGivesOneScene) {
  const data::WindowConfig w;
  const auto scenes = data::scenes_from_tracks(uniform_tracks(1, w.window_frames()), w);
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].target().obs.size(), 7u);
  EXPECT_EQ(scenes[0].future.size(), 6u);
  EXPECT_DOUBLE_EQ(scenes[0].prediction_time, 3.0);
}

TEST(ScenesFromTracks, HalfPresentNeighborIsNotTarget) {
  data::WindowConfig w;
  auto tracks = uniform_tracks(2, w.window_frames());
  tracks[1].obs.resize(6);
  const auto scenes = data::scenes_from_tracks(tracks, w);
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].target_id, 0);
  const Track* n = scenes[0].find(1);
  ASSERT_NE(n, nullptr);
  EXPECT_EQ(n->obs.size(), 6u);
}

TEST(ScenesFromTracks, WindowCount) {
  for (std::size_t frames : {13u, 18u, 19u, 40u}) {
    data::WindowConfig w;
    w.stride = w.future_steps;
    const auto scenes = data::scenes_from_tracks(uniform_tracks(1, frames), w);
    EXPECT_EQ(scenes.size(), (frames - w.window_frames()) / w.stride + 1) << frames;
  }
  data::WindowConfig w;
  EXPECT_TRUE(data::scenes_from_tracks(uniform_tracks(1, 12), w).empty());
}

TEST(ScenesFromTracks, NeverFabricatesObservations) {
  std::mt19937_64 rng(2);
  auto tracks = uniform_tracks(6, 30);
  for (auto& t : tracks) {
    std::vector<Observation> kept;
    for (auto& o : t.obs)
      if (rng() % 5) kept.push_back(o);
    t.obs = kept;
  }
  std::set<std::tuple<int, double, double, double>> records;
  for (const auto& t : tracks)
    for (const auto& o : t.obs) records.insert({t.agent_id, o.t, o.pos.x, o.pos.y});
  data::WindowConfig w;
  w.stride = 2;
  const auto scenes = data::scenes_from_tracks(tracks, w);
  EXPECT_FALSE(scenes.empty());
  for (const Scene& s : scenes) {
    EXPECT_GE(s.target().obs.size(), 2u);
    EXPECT_EQ(s.future.size(), 6u);
    for (const auto& t : s.tracks)
      for (const auto& o : t.obs) EXPECT_TRUE(records.contains({t.agent_id, o.t, o.pos.x, o.pos.y}));
    for (const auto& o : s.future) EXPECT_TRUE(records.contains({s.target_id, o.t, o.pos.x, o.pos.y}));
  }
}

TEST(Synthetic, ConstantVelocityFutureIsLinear) {
  data::ScenarioConfig cfg;
  cfg.n_scenes = 20;
  for (const Scene& s : data::generate_synthetic(cfg)) {
    const Vec2 last = s.target().obs.back().pos;
    const Vec2 v = s.truth->target_velocity;
    for (const auto& o : s.future) {
      EXPECT_NEAR(o.pos.x, last.x + v.x * o.t, 1e-9);
      EXPECT_NEAR(o.pos.y, last.y + v.y * o.t, 1e-9);
    }
    const Track& tgt = s.target();
    for (const auto& o : tgt.obs) {
      EXPECT_NEAR(o.pos.x, last.x + v.x * o.t, 1e-9);
      EXPECT_NEAR(o.pos.y, last.y + v.y * o.t, 1e-9);
    }
    EXPECT_GE(s.tracks.size(), 2u);
    EXPECT_LE(s.tracks.size(), 8u);
  }
}

TEST(Synthetic, LeadBrakeFollowerSlowsDown) {
  data::ScenarioConfig cfg;
  cfg.kind = data::ScenarioKind::kLeadBrake;
  cfg.n_scenes = 50;
  for (const Scene& s : data::generate_synthetic(cfg)) {
    ASSERT_TRUE(s.truth.has_value());
    const auto& f = s.truth->noiseless_future;
    const double end_speed = (f[f.size() - 1].pos - f[f.size() - 2].pos).norm() / 0.5;
    const double now_speed = s.truth->target_velocity.norm();
    EXPECT_LT(end_speed, now_speed);
    EXPECT_GE(s.truth->reaction_delay, 0.5);
    EXPECT_LE(s.truth->reaction_delay, 1.0);
    EXPECT_LT(s.truth->brake_time, 0.0);
    EXPECT_NE(s.find(s.truth->leader_id), nullptr);
  }
}

TEST(Synthetic, CrossingHasTwoInteractingAgents) {
  data::ScenarioConfig cfg;
  cfg.kind = data::ScenarioKind::kCrossing;
  cfg.n_scenes = 10;
  for (const Scene& s : data::generate_synthetic(cfg)) {
    EXPECT_GE(s.tracks.size(), 2u);
    EXPECT_EQ(s.future.size(), 6u);
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  for (auto kind : {data::ScenarioKind::kConstantVelocity, data::ScenarioKind::kLeadBrake,
                    data::ScenarioKind::kCrossing, data::ScenarioKind::kDropout}) {
    data::ScenarioConfig cfg;
    cfg.kind = kind;
    cfg.n_scenes = 12;
    cfg.noise_sigma = 0.1;
    cfg.seed = 9;
    const auto a = data::generate_synthetic(cfg), b = data::generate_synthetic(cfg);
    std::ostringstream sa, sb;
    for (const auto& s : a) data::write_csv(sa, data::scene_to_tracks(s));
    for (const auto& s : b) data::write_csv(sb, data::scene_to_tracks(s));
    EXPECT_EQ(sa.str(), sb.str());
    cfg.seed = 10;
    std::ostringstream sc;
    for (const auto& s : data::generate_synthetic(cfg)) data::write_csv(sc, data::scene_to_tracks(s));
    EXPECT_NE(sa.str(), sc.str());
  }
}

TEST(Synthetic, DropoutKeepsTargetHistory) {
  data::ScenarioConfig cfg;
  cfg.kind = data::ScenarioKind::kDropout;
  cfg.n_scenes = 200;
  cfg.dropout_rate = 0.9;
  cfg.target_dropout_rate = 0.95;
  std::size_t neighbor_points = 0;
  for (const Scene& s : data::generate_synthetic(cfg)) {
    const Track& t = s.target();
    EXPECT_GE(t.obs.size(), 2u);
    EXPECT_DOUBLE_EQ(t.obs.front().t, -3.0);
    EXPECT_DOUBLE_EQ(t.obs.back().t, 0.0);
    EXPECT_EQ(s.future.size(), 6u);
    for (const auto& tr : s.tracks) {
      EXPECT_FALSE(tr.obs.empty());
      if (tr.agent_id != s.target_id) neighbor_points += tr.obs.size();
    }
  }
  EXPECT_GT(neighbor_points, 0u);
}

TEST(ApplyDropout, RemovesOnlyNeighborObservations) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Scene s = testing::random_scene(rng, 5);
    const Scene before = s;
    data::apply_dropout(s, 0.5, 0.0, rng);
    EXPECT_EQ(s.target().obs.size(), before.target().obs.size());
    for (const Track& t : s.tracks) {
      const Track* orig = before.find(t.agent_id);
      ASSERT_NE(orig, nullptr);
      EXPECT_FALSE(t.obs.empty());
      for (const auto& o : t.obs)
        EXPECT_TRUE(std::any_of(orig->obs.begin(), orig->obs.end(),
                                [&](const Observation& q) { return q.t == o.t && q.pos == o.pos; }));
    }
  }
}

TEST(ScenarioConfig, ParseAndValidate) {
  const auto cfg = data::ScenarioConfig::from_map({{"kind", "lead_brake"}, {"n_agents", "3-5"}, {"seed", "4"}});
  EXPECT_EQ(cfg.kind, data::ScenarioKind::kLeadBrake);
  EXPECT_EQ(cfg.n_agents_min, 3u);
  EXPECT_EQ(cfg.n_agents_max, 5u);
  EXPECT_EQ(data::ScenarioConfig::from_map(cfg.to_map()).to_map(), cfg.to_map());
  try {
    data::parse_scenario_kind("highway");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* k : {"constant_velocity", "lead_brake", "crossing", "dropout"})
      EXPECT_NE(msg.find(k), std::string::npos);
  }
  EXPECT_THROW(data::ScenarioConfig::from_map({{"colour", "red"}}), ConfigError);
  EXPECT_THROW(data::ScenarioConfig::from_map({{"dropout_rate", "1.5"}}), ConfigError);
}

TEST(Split, ValidationFractionAndDeterminism) {
  const auto none = data::split_indices(50, 0.0, 1);
  EXPECT_TRUE(none.val.empty());
  EXPECT_EQ(none.train.size(), 50u);
  const auto a = data::split_indices(100, 0.2, 7), b = data::split_indices(100, 0.2, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.val.size(), 20u);
  std::vector<std::size_t> all = a.train;
  all.insert(all.end(), a.val.begin(), a.val.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(data::split_indices(10, 1.0, 1), ConfigError);
}

TEST(Batches, PartialBatchAndReshuffle) {
  std::vector<std::size_t> idx(100);
  for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
  const auto one = data::epoch_batches(idx, 128, 3, 0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].size(), 100u);
  const auto e0 = data::epoch_batches(idx, 32, 3, 0), e0b = data::epoch_batches(idx, 32, 3, 0),
             e1 = data::epoch_batches(idx, 32, 3, 1);
  ASSERT_EQ(e0.size(), 4u);
  EXPECT_EQ(e0.back().size(), 4u);
  EXPECT_EQ(e0, e0b);
  EXPECT_NE(e0, e1);
}

}  // namespace
}  // namespace ust
