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
#include <random>

#include "metric_oracles.hpp"
#include "ust/errors.hpp"
#include "ust/metrics.hpp"

namespace ust {
namespace {

using metrics::ade;
using metrics::fde;

Trajectory path(std::initializer_list<Vec2> pts) {
  Trajectory t;
  double time = 0.5;
  for (Vec2 p : pts) {
    t.push_back({time, p});
    time += 0.5;
  }
  return t;
}

Trajectory shifted(const Trajectory& t, Vec2 d) {
  Trajectory out = t;
  for (auto& o : out) o.pos += d;
  return out;
}

TEST(Ade, Examples) {
  const std::vector<Trajectory> gt{path({{0, 0}, {1, 1}, {2, 3}}), path({{5, 5}, {6, 5}, {7, 5}})};
  EXPECT_EQ(ade(gt, gt), 0.0);
  const std::vector<Trajectory> off{shifted(gt[0], {3, 4}), shifted(gt[1], {3, 4})};
  EXPECT_DOUBLE_EQ(ade(off, gt), 5.0);
  const std::vector<Trajectory> one_gt{path({{0, 0}, {0, 0}})};
  const std::vector<Trajectory> one_pred{path({{1, 0}, {0, 3}})};
  EXPECT_DOUBLE_EQ(ade(one_pred, one_gt), 2.0);
}

TEST(Fde, Examples) {
  const std::vector<Trajectory> gt{path({{0, 0}, {1, 1}, {2, 3}})};
  EXPECT_EQ(fde(gt, gt), 0.0);
  const std::vector<Trajectory> pred{path({{9, -9}, {4, 4}, {5, 7}})};
  EXPECT_DOUBLE_EQ(fde(pred, gt), 5.0);
  const std::vector<Trajectory> gts{path({{0, 0}}), path({{0, 0}})};
  const std::vector<Trajectory> preds{path({{1, 0}}), path({{0, 3}})};
  EXPECT_DOUBLE_EQ(fde(preds, gts), 2.0);
}

TEST(AdeFde, MismatchIsError) {
  const std::vector<Trajectory> a{path({{0, 0}, {1, 1}})};
  const std::vector<Trajectory> b{path({{0, 0}})};
  const std::vector<Trajectory> two{path({{0, 0}, {1, 1}}), path({{0, 0}, {1, 1}})};
  EXPECT_THROW(ade(a, b), DimensionError);
  EXPECT_THROW(fde(a, two), DimensionError);
}

TEST(AdeFde, OrderAndTranslationInvariant) {
  std::mt19937_64 rng(1);
  std::vector<std::vector<Trajectory>> sets;
  std::vector<Trajectory> gts;
  testing::random_mon_instance(rng, 7, 1, 6, sets, gts);
  std::vector<Trajectory> preds;
  for (auto& s : sets) preds.push_back(s[0]);
  const double a = ade(preds, gts), f = fde(preds, gts);
  std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
  std::vector<Trajectory> pp, gp, pt, gtt;
  for (std::size_t i : perm) {
    pp.push_back(preds[i]);
    gp.push_back(gts[i]);
  }
  EXPECT_NEAR(ade(pp, gp), a, 1e-12);
  EXPECT_NEAR(fde(pp, gp), f, 1e-12);
  for (std::size_t i = 0; i < 7; ++i) {
    pt.push_back(shifted(preds[i], {120.5, -33.25}));
    gtt.push_back(shifted(gts[i], {120.5, -33.25}));
  }
  EXPECT_NEAR(ade(pt, gtt), a, 1e-9);
  EXPECT_NEAR(fde(pt, gtt), f, 1e-9);
}

TEST(WeightedSums, Examples) {
  const auto ones = metrics::weighted_sums(1, 1, 1, 1, 1, 1);
  EXPECT_NEAR(ones.wsade, 1.0, 1e-15);
  EXPECT_NEAR(ones.wsfde, 1.0, 1e-15);
  const auto ust_row = metrics::weighted_sums(2.10, 0.75, 1.77, 3.65, 1.44, 3.14);
  EXPECT_NEAR(ust_row.wsade, 1.2444, 1e-12);
  EXPECT_NEAR(ust_row.wsfde, 2.2560, 1e-12);
  EXPECT_NEAR(ust_row.wsade, 1.24, 0.01);
  EXPECT_NEAR(ust_row.wsfde, 2.25, 0.01);
  for (double x : {0.0, 0.37, 5.5, 123.0}) EXPECT_NEAR(metrics::weighted_sums(x, x, x, x, x, x).wsade, x, 1e-12 * (1 + x));
  EXPECT_THROW(metrics::weighted_sums(-1, 0, 0, 0, 0, 0), DataError);
}

TEST(WeightedSums, ReferenceAdeColumnAndConsistentFdeRows) {
  for (const auto& row : testing::reference_rows()) {
    const auto ws = metrics::weighted_sums(row.ade[0], row.ade[1], row.ade[2], row.fde[0], row.fde[1], row.fde[2]);
    EXPECT_NEAR(ws.wsade, row.ade[3], 0.01) << row.method;
    if (row.method != "TrafficPredict") {
      EXPECT_NEAR(ws.wsfde, row.fde[3], 0.01) << row.method;
    }
  }
}

TEST(Rmse, Examples) {
  const std::vector<Trajectory> gt{path({{0, 0}, {1, 0}, {2, 0}})};
  const std::vector<double> horizons{0.5, 1.0, 1.5};
  for (auto [h, v] : metrics::rmse_by_horizon(gt, gt, horizons)) EXPECT_EQ(v, 0.0);
  const std::vector<Trajectory> p{path({{0, 0}, {1, 2}, {2, 0}})};
  const std::vector<double> one{1.0};
  EXPECT_DOUBLE_EQ(metrics::rmse_by_horizon(p, gt, one).at(1.0), 2.0);
  const std::vector<Trajectory> gts{path({{0, 0}, {0, 0}}), path({{0, 0}, {0, 0}})};
  const std::vector<Trajectory> preds{path({{0, 0}, {3, 0}}), path({{0, 0}, {0, 4}})};
  EXPECT_NEAR(metrics::rmse_by_horizon(preds, gts, one).at(1.0), 3.5355339059327378, 1e-12);
  const std::vector<double> far{2.5};
  EXPECT_THROW(metrics::rmse_by_horizon(gt, gt, far), ConfigError);
}

TEST(Mon, ExactSampleContributesZero) {
  std::mt19937_64 rng(2);
  std::vector<std::vector<Trajectory>> sets;
  std::vector<Trajectory> gts;
  testing::random_mon_instance(rng, 3, 6, 6, sets, gts);
  for (std::size_t a = 0; a < 3; ++a) sets[a][a + 1] = gts[a];
  const auto r = metrics::mon_metrics(sets, gts);
  EXPECT_EQ(r.ade, 0.0);
  EXPECT_EQ(r.fde, 0.0);
}

TEST(Mon, IdenticalSamplesEqualPlainMetrics) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<Trajectory>> sets;
  std::vector<Trajectory> gts;
  testing::random_mon_instance(rng, 5, 1, 6, sets, gts);
  std::vector<Trajectory> preds;
  for (auto& s : sets) {
    preds.push_back(s[0]);
    s.assign(4, s[0]);
  }
  const auto r = metrics::mon_metrics(sets, gts);
  EXPECT_DOUBLE_EQ(r.ade, ade(preds, gts));
  EXPECT_DOUBLE_EQ(r.fde, fde(preds, gts));
  for (auto& s : sets) s.resize(1);
  const auto single = metrics::mon_metrics(sets, gts, true);
  EXPECT_DOUBLE_EQ(single.ade, ade(preds, gts));
  EXPECT_DOUBLE_EQ(single.fde, fde(preds, gts));
}

TEST(Mon, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<Trajectory>> sets;
    std::vector<Trajectory> gts;
    testing::random_mon_instance(rng, 1 + rng() % 3, 6, 6, sets, gts);
    const auto r = metrics::mon_metrics(sets, gts);
    const auto o = testing::exhaustive_mon(sets, gts);
    EXPECT_NEAR(r.ade, o.ade, 1e-12);
    EXPECT_NEAR(r.fde, o.fde, 1e-12);
    for (std::size_t s = 0; s < 6; ++s) {
      std::vector<Trajectory> fixed;
      for (auto& set : sets) fixed.push_back(set[s]);
      EXPECT_LE(r.ade, ade(fixed, gts) + 1e-12);
    }
    const auto joint = metrics::mon_metrics(sets, gts, true);
    EXPECT_EQ(joint.ade, r.ade);
    EXPECT_GE(joint.fde, r.fde);
  }
}

TEST(Mon, EmptySampleSetIsError) {
  const std::vector<Trajectory> gts{path({{0, 0}})};
  const std::vector<std::vector<Trajectory>> empty(1);
  EXPECT_THROW(metrics::mon_metrics(empty, gts), EmptySetError);
}

TEST(Report, PerTypeAndWeightedOnlyWithAllThreeTypes) {
  const std::vector<Trajectory> gts{path({{0, 0}}), path({{0, 0}}), path({{0, 0}}), path({{0, 0}})};
  const std::vector<Trajectory> preds{path({{1, 0}}), path({{0, 2}}), path({{3, 0}}), path({{0, 4}})};
  const std::vector<AgentType> types{AgentType::kVehicle, AgentType::kPedestrian, AgentType::kBicycle,
                                     AgentType::kVehicle};
  const auto r = metrics::build_report(preds, gts, types);
  EXPECT_DOUBLE_EQ(r.per_type.at(AgentType::kVehicle).ade, 2.5);
  EXPECT_EQ(r.per_type.at(AgentType::kVehicle).count, 2u);
  ASSERT_TRUE(r.wsade.has_value());
  EXPECT_NEAR(*r.wsade, 0.2 * 2.5 + 0.58 * 2.0 + 0.22 * 3.0, 1e-12);
  const std::vector<AgentType> two{AgentType::kVehicle, AgentType::kPedestrian, AgentType::kPedestrian,
                                   AgentType::kVehicle};
  EXPECT_FALSE(metrics::build_report(preds, gts, two).wsade.has_value());
  const std::string csv = metrics::report_to_csv(r);
  EXPECT_EQ(csv.rfind("metric,agent_type,horizon,value\n", 0), 0u);
  EXPECT_NE(csv.find("wsade,weighted,,"), std::string::npos);
  EXPECT_NE(metrics::report_to_text(r).find("ade.vehicle=2.5"), std::string::npos);
}

}  // namespace
}  // namespace ust
