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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ust/types.hpp"

namespace ust::metrics {

/// Weights of the type-weighted sums: vehicles, pedestrians, bicycles.
inline constexpr double kVehicleWeight = 0.20;
inline constexpr double kPedestrianWeight = 0.58;
inline constexpr double kBicycleWeight = 0.22;

struct TypeStats {
  double ade = 0.0;
  double fde = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  double ade = 0.0;
  double fde = 0.0;
  std::size_t count = 0;
  std::map<AgentType, TypeStats> per_type;
  std::optional<double> wsade;  // only when vehicle, pedestrian and bicycle are all present
  std::optional<double> wsfde;
  std::map<double, double> rmse_by_horizon;
  std::optional<double> mon_ade;
  std::optional<double> mon_fde;
};

/// Sum over agents and steps of Euclidean error / (N * T).
double ade(std::span<const Trajectory> preds, std::span<const Trajectory> gts);
/// Mean final-step Euclidean error.
double fde(std::span<const Trajectory> preds, std::span<const Trajectory> gts);

struct WeightedSums {
  double wsade = 0.0;
  double wsfde = 0.0;
};

WeightedSums weighted_sums(double ade_vehicle, double ade_pedestrian, double ade_bicycle, double fde_vehicle,
                           double fde_pedestrian, double fde_bicycle);

/// For each horizon (s), RMSE over agents at the step whose timestamp is closest.
/// A horizon past the last step (by more than half a step) throws ConfigError.
std::map<double, double> rmse_by_horizon(std::span<const Trajectory> preds, std::span<const Trajectory> gts,
                                         std::span<const double> horizons);

struct MonResult {
  double ade = 0.0;
  double fde = 0.0;
};

/// Best-of-N per agent, selected independently for ADE and FDE by default.
MonResult mon_metrics(std::span<const std::vector<Trajectory>> sample_sets, std::span<const Trajectory> gts,
                      bool joint_selection = false);

/// Aggregates ADE/FDE overall and per agent type; weighted sums when all three types exist.
MetricReport build_report(std::span<const Trajectory> preds, std::span<const Trajectory> gts,
                          std::span<const AgentType> types, std::span<const double> horizons = {});

/// key=value text, one metric per line, fixed order.
std::string report_to_text(const MetricReport& report);
/// CSV with header metric,agent_type,horizon,value.
std::string report_to_csv(const MetricReport& report);

}  // namespace ust::metrics
