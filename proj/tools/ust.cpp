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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "ust/commands.hpp"
#include "ust/errors.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kNumericExit = 4;

struct Flags {
  std::string config;
  std::optional<std::int64_t> seed;
  std::string out = "out";
  std::string checkpoint;
  std::string data;
  std::string axis = "refinements";
};

ust::app::RunConfig run_config(const Flags& f) {
  ust::app::RunConfig run = f.config.empty() ? ust::app::RunConfig::from_map({}) : ust::app::RunConfig::load(f.config);
  if (f.seed) run.set_seed(static_cast<std::uint64_t>(*f.seed));
  return run;
}

std::optional<std::filesystem::path> checkpoint_of(const Flags& f) {
  if (f.checkpoint.empty()) return std::nullopt;
  return std::filesystem::path(f.checkpoint);
}

ust::data::ScenarioConfig scenario_config(const Flags& f) {
  ust::kv::Map raw = f.config.empty() ? ust::kv::Map{} : ust::kv::parse_file(f.config);
  ust::kv::Map plain;
  for (const auto& [k, v] : raw) plain[k.rfind("scenario.", 0) == 0 ? k.substr(9) : k] = v;
  if (f.seed) plain["seed"] = std::to_string(*f.seed);
  return ust::data::ScenarioConfig::from_map(plain);
}

void add_common(CLI::App* cmd, Flags& f, bool checkpoint, bool data) {
  cmd->add_option("--config", f.config, "flat key=value configuration file");
  cmd->add_option("--seed", f.seed, "seed override");
  cmd->add_option("--out", f.out, "output directory");
  if (checkpoint) cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file");
  if (data) cmd->add_option("--data", f.data, "CSV file or directory of CSV files");
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Keep large tensor buffers on the heap.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Unified spatio-temporal trajectory prediction"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "generate synthetic scenes as CSV");
  add_common(synth, f, false, false);
  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, f, false, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or baseline");
  add_common(eval, f, true, true);
  auto* predict = app.add_subcommand("predict", "write predicted trajectories");
  add_common(predict, f, true, true);
  auto* ablate = app.add_subcommand("ablate", "train one model per axis value");
  add_common(ablate, f, false, true);
  ablate->add_option("--axis", f.axis, "features, refinements or range");
  auto* activations = app.add_subcommand("activations", "export pooled-channel activation tables");
  add_common(activations, f, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (synth->parsed()) {
      ust::app::cmd_synth(scenario_config(f), f.out);
    } else if (train->parsed()) {
      const auto r = ust::app::cmd_train(run_config(f), f.out, f.data, &std::cerr);
      std::cout << "steps=" << r.steps << " best_epoch=" << r.best_epoch << '\n';
    } else if (eval->parsed()) {
      const auto ev = ust::app::cmd_eval(run_config(f), checkpoint_of(f), f.out, f.data);
      std::cout << ust::metrics::report_to_text(ev.report);
    } else if (predict->parsed()) {
      ust::app::cmd_predict(run_config(f), checkpoint_of(f), f.out, f.data);
    } else if (ablate->parsed()) {
      std::cout << ust::app::cmd_ablate(run_config(f), ust::app::parse_ablation_axis(f.axis), f.out, f.data, &std::cerr);
    } else if (activations->parsed()) {
      if (f.checkpoint.empty()) throw ust::ConfigError("activations needs --checkpoint");
      ust::app::cmd_activations(run_config(f), f.checkpoint, f.out, f.data);
    }
  } catch (const ust::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const ust::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const ust::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
