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

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "ust/checkpoint.hpp"
#include "ust/data_io.hpp"
#include "ust/errors.hpp"
#include "ust/kv.hpp"
#include "ust/model.hpp"
#include "ust/training.hpp"

namespace ust {
namespace {

TEST(Kv, ParseCommentsAndErrors) {
  std::istringstream is("# comment\n a = 1 \n\nb=two # trailing\n");
  const kv::Map m = kv::parse(is);
  EXPECT_EQ(m.at("a"), "1");
  EXPECT_EQ(m.at("b"), "two");
  std::istringstream bad("novalue\n");
  EXPECT_THROW(kv::parse(bad), ConfigError);
  EXPECT_THROW(kv::to_double("k", "x1"), ConfigError);
  EXPECT_THROW(kv::to_size("k", "-3"), ConfigError);
  EXPECT_TRUE(kv::to_bool("k", "true"));
  EXPECT_THROW(kv::to_bool("k", "maybe"), ConfigError);
  std::istringstream again(kv::format(m));
  EXPECT_EQ(kv::parse(again), m);
}

TEST(Checkpoint, TextRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  Checkpoint c;
  c.hidden_size = 16;
  c.meta["model.kind"] = "ust";
  for (auto shape : {std::vector<std::size_t>{3}, std::vector<std::size_t>{4, 5}, std::vector<std::size_t>{2, 1, 3}}) {
    Tensor t(shape);
    for (double& v : t.values()) v = u(rng) * std::pow(10.0, double(rng() % 20) - 10.0);
    c.records.emplace_back("p" + std::to_string(c.records.size()), t);
  }
  std::stringstream ss;
  write_checkpoint(ss, c);
  EXPECT_EQ(ss.str().rfind("UST-CHECKPOINT 1 16\n", 0), 0u);
  const Checkpoint back = read_checkpoint(ss);
  EXPECT_EQ(back.hidden_size, 16u);
  EXPECT_EQ(back.meta, c.meta);
  ASSERT_EQ(back.records.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(back.records[r].first, c.records[r].first);
    EXPECT_EQ(back.records[r].second.shape(), c.records[r].second.shape());
    for (std::size_t i = 0; i < c.records[r].second.size(); ++i) {
      const double a = c.records[r].second[i], b = back.records[r].second[i];
      EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(Checkpoint, MalformedInputIsDataError) {
  std::istringstream bad_header("NOT-A-CHECKPOINT 1 4\n");
  EXPECT_THROW(read_checkpoint(bad_header), DataError);
  std::istringstream bad_version("UST-CHECKPOINT 99 4\n");
  EXPECT_THROW(read_checkpoint(bad_version), DataError);
  std::istringstream short_values("UST-CHECKPOINT 1 4\nparam w 1 3\n1 2\n");
  EXPECT_THROW(read_checkpoint(short_values), DataError);
}

TEST(Checkpoint, RestoreChecksNamesAndShapes) {
  ModelConfig mc;
  mc.hidden = 8;
  Model a(mc, 1);
  Checkpoint c = a.to_checkpoint();
  Model b(mc, 2);
  nn::StateRefs refs = b.state();
  restore_state(c, refs);
  for (std::size_t i = 0; i < refs.params.size(); ++i)
    EXPECT_EQ(refs.params[i]->value.values()[0], a.state().params[i]->value.values()[0]);
  c.records.pop_back();
  EXPECT_THROW(restore_state(c, refs), DataError);
  ModelConfig wider = mc;
  wider.hidden = 9;
  Model w(wider, 3);
  nn::StateRefs wrefs = w.state();
  EXPECT_THROW(restore_state(a.to_checkpoint(), wrefs), DataError);
}

TEST(Checkpoint, SaveLoadEvaluateMatchesInMemory) {
  data::ScenarioConfig sc;
  sc.kind = data::ScenarioKind::kLeadBrake;
  sc.n_scenes = 40;
  const auto scenes = data::generate_synthetic(sc);
  for (bool stochastic : {false, true}) {
    ModelConfig mc;
    mc.hidden = 12;
    mc.refinements = 1;
    mc.stochastic = stochastic;
    mc.noise_dim = 4;
    Model model(mc, 5);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16;
    train(model, std::span(scenes).first(32), std::span(scenes).subspan(32), tc);
    const auto samples = prepare_samples(std::span(scenes).subspan(32), mc);
    const Evaluation before = evaluate(model, samples);

    const auto path = std::filesystem::temp_directory_path() / ("ust_ckpt_" + std::to_string(stochastic) + ".txt");
    save_checkpoint(path, model.to_checkpoint());
    Model loaded = Model::from_checkpoint(load_checkpoint(path));
    std::filesystem::remove(path);
    EXPECT_EQ(loaded.config().to_map(), mc.to_map());
    const Evaluation after = evaluate(loaded, samples);
    EXPECT_NEAR(after.report.ade, before.report.ade, 1e-9);
    EXPECT_NEAR(after.report.fde, before.report.fde, 1e-9);
    if (stochastic) {
      ASSERT_TRUE(after.report.mon_ade.has_value());
      EXPECT_NEAR(*after.report.mon_ade, *before.report.mon_ade, 1e-9);
      EXPECT_NEAR(*after.report.mon_fde, *before.report.mon_fde, 1e-9);
    }
  }
}

TEST(Checkpoint, MissingFileIsError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/ckpt.txt"), Error);
}

}  // namespace
}  // namespace ust
