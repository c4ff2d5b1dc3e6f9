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

#include <cstdint>
#include <span>
#include <vector>

#include "ust/autodiff.hpp"

namespace ust::optim {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Coupled L2: added to the gradient before the moment updates.
  double weight_decay = 1e-4;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step_count = 0;
};

AdamState make_adam_state(std::span<ad::Parameter* const> params, const AdamConfig& config);

/// One bias-corrected Adam update over `params` using their current gradients.
void adam_step(std::span<ad::Parameter* const> params, AdamState& state);

/// L2 norm over all parameter gradients.
double grad_norm(std::span<ad::Parameter* const> params);

}  // namespace ust::optim
