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

#include "ust/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ust/errors.hpp"

namespace ust::metrics {

namespace {

void check_matched(std::span<const Trajectory> preds, std::span<const Trajectory> gts) {
  if (preds.size() != gts.size()) {
    throw DimensionError("metrics: " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(gts.size()) + " ground truths");
  }
  if (preds.empty()) throw EmptySetError("metrics: no agents");
  for (std::size_t n = 0; n < preds.size(); ++n) {
    if (preds[n].size() != gts[n].size() || preds[n].empty()) {
      throw DimensionError("metrics: agent " + std::to_string(n) + " has " + std::to_string(preds[n].size()) +
                           " predicted vs " + std::to_string(gts[n].size()) + " true steps");
    }
  }
}

double mean_displacement(const Trajectory& p, const Trajectory& g) {
  double s = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) s += (p[t].pos - g[t].pos).norm();
  return s / static_cast<double>(p.size());
}

double final_displacement(const Trajectory& p, const Trajectory& g) { return (p.back().pos - g.back().pos).norm(); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

double ade(std::span<const Trajectory> preds, std::span<const Trajectory> gts) {
  check_matched(preds, gts);
  double s = 0.0;
  std::size_t steps = 0;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    for (std::size_t t = 0; t < preds[n].size(); ++t) s += (preds[n][t].pos - gts[n][t].pos).norm();
    steps += preds[n].size();
  }
  return s / static_cast<double>(steps);
}

double fde(std::span<const Trajectory> preds, std::span<const Trajectory> gts) {
  check_matched(preds, gts);
  double s = 0.0;
  for (std::size_t n = 0; n < preds.size(); ++n) s += final_displacement(preds[n], gts[n]);
  return s / static_cast<double>(preds.size());
}

WeightedSums weighted_sums(double ade_v, double ade_p, double ade_b, double fde_v, double fde_p, double fde_b) {
  for (double v : {ade_v, ade_p, ade_b, fde_v, fde_p, fde_b}) {
    if (!(v >= 0.0)) throw DataError("weighted_sums: inputs must be non-negative");
  }
  return {kVehicleWeight * ade_v + kPedestrianWeight * ade_p + kBicycleWeight * ade_b,
          kVehicleWeight * fde_v + kPedestrianWeight * fde_p + kBicycleWeight * fde_b};
}

std::map<double, double> rmse_by_horizon(std::span<const Trajectory> preds, std::span<const Trajectory> gts,
                                         std::span<const double> horizons) {
  check_matched(preds, gts);
  std::map<double, double> out;
  for (double h : horizons) {
    double sq = 0.0;
    for (std::size_t n = 0; n < preds.size(); ++n) {
      const Trajectory& g = gts[n];
      const double step = g.size() > 1 ? g[1].t - g[0].t : g[0].t;
      if (h > g.back().t + 0.5 * std::abs(step) + 1e-9) {
        throw ConfigError("rmse horizon " + fmt(h) + " s is beyond the prediction horizon " + fmt(g.back().t) + " s");
      }
      std::size_t best = 0;
      for (std::size_t t = 1; t < g.size(); ++t)
        if (std::abs(g[t].t - h) < std::abs(g[best].t - h)) best = t;
      sq += (preds[n][best].pos - g[best].pos).squared_norm();
    }
    out[h] = std::sqrt(sq / static_cast<double>(preds.size()));
  }
  return out;
}

MonResult mon_metrics(std::span<const std::vector<Trajectory>> sample_sets, std::span<const Trajectory> gts,
                      bool joint_selection) {
  if (sample_sets.size() != gts.size()) throw DimensionError("mon_metrics: sample sets and ground truths differ");
  if (gts.empty()) throw EmptySetError("mon_metrics: no agents");
  MonResult r;
  for (std::size_t n = 0; n < gts.size(); ++n) {
    const auto& samples = sample_sets[n];
    if (samples.empty()) throw EmptySetError("mon_metrics: agent " + std::to_string(n) + " has no samples");
    double best_ade = std::numeric_limits<double>::infinity();
    double best_fde = std::numeric_limits<double>::infinity();
    double fde_of_best_ade = 0.0;
    for (const Trajectory& s : samples) {
      if (s.size() != gts[n].size() || s.empty()) throw DimensionError("mon_metrics: sample length mismatch");
      const double a = mean_displacement(s, gts[n]);
      const double f = final_displacement(s, gts[n]);
      if (a < best_ade) {
        best_ade = a;
        fde_of_best_ade = f;
      }
      best_fde = std::min(best_fde, f);
    }
    r.ade += best_ade;
    r.fde += joint_selection ? fde_of_best_ade : best_fde;
  }
  r.ade /= static_cast<double>(gts.size());
  r.fde /= static_cast<double>(gts.size());
  return r;
}

MetricReport build_report(std::span<const Trajectory> preds, std::span<const Trajectory> gts,
                          std::span<const AgentType> types, std::span<const double> horizons) {
  check_matched(preds, gts);
  if (types.size() != preds.size()) throw DimensionError("build_report: one agent type per prediction required");
  MetricReport report;
  report.ade = ade(preds, gts);
  report.fde = fde(preds, gts);
  report.count = preds.size();
  for (std::size_t n = 0; n < preds.size(); ++n) {
    TypeStats& s = report.per_type[types[n]];
    s.ade += mean_displacement(preds[n], gts[n]);
    s.fde += final_displacement(preds[n], gts[n]);
    s.count += 1;
  }
  for (auto& [type, s] : report.per_type) {
    s.ade /= static_cast<double>(s.count);
    s.fde /= static_cast<double>(s.count);
  }
  const auto& pt = report.per_type;
  if (pt.contains(AgentType::kVehicle) && pt.contains(AgentType::kPedestrian) && pt.contains(AgentType::kBicycle)) {
    const WeightedSums ws =
        weighted_sums(pt.at(AgentType::kVehicle).ade, pt.at(AgentType::kPedestrian).ade,
                      pt.at(AgentType::kBicycle).ade, pt.at(AgentType::kVehicle).fde,
                      pt.at(AgentType::kPedestrian).fde, pt.at(AgentType::kBicycle).fde);
    report.wsade = ws.wsade;
    report.wsfde = ws.wsfde;
  }
  if (!horizons.empty()) report.rmse_by_horizon = rmse_by_horizon(preds, gts, horizons);
  return report;
}

std::string report_to_text(const MetricReport& r) {
  std::ostringstream os;
  os << "count=" << r.count << '\n';
  os << "ade=" << fmt(r.ade) << '\n';
  os << "fde=" << fmt(r.fde) << '\n';
  for (const auto& [type, s] : r.per_type) {
    os << "ade." << to_string(type) << '=' << fmt(s.ade) << '\n';
    os << "fde." << to_string(type) << '=' << fmt(s.fde) << '\n';
    os << "count." << to_string(type) << '=' << s.count << '\n';
  }
  if (r.wsade) os << "wsade=" << fmt(*r.wsade) << '\n';
  if (r.wsfde) os << "wsfde=" << fmt(*r.wsfde) << '\n';
  for (const auto& [h, v] : r.rmse_by_horizon) os << "rmse@" << fmt(h) << "s=" << fmt(v) << '\n';
  if (r.mon_ade) os << "mon_ade=" << fmt(*r.mon_ade) << '\n';
  if (r.mon_fde) os << "mon_fde=" << fmt(*r.mon_fde) << '\n';
  return os.str();
}

std::string report_to_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "metric,agent_type,horizon,value\n";
  os << "ade,all,," << fmt(r.ade) << '\n';
  os << "fde,all,," << fmt(r.fde) << '\n';
  for (const auto& [type, s] : r.per_type) {
    os << "ade," << to_string(type) << ",," << fmt(s.ade) << '\n';
    os << "fde," << to_string(type) << ",," << fmt(s.fde) << '\n';
  }
  if (r.wsade) os << "wsade,weighted,," << fmt(*r.wsade) << '\n';
  if (r.wsfde) os << "wsfde,weighted,," << fmt(*r.wsfde) << '\n';
  for (const auto& [h, v] : r.rmse_by_horizon) os << "rmse,all," << fmt(h) << ',' << fmt(v) << '\n';
  if (r.mon_ade) os << "mon_ade,all,," << fmt(*r.mon_ade) << '\n';
  if (r.mon_fde) os << "mon_fde,all,," << fmt(*r.mon_fde) << '\n';
  return os.str();
}

}  // namespace ust::metrics
