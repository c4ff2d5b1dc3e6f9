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

#include "ust/optim.hpp"

#include <cmath>

#include "ust/errors.hpp"

namespace ust::optim {

AdamState make_adam_state(std::span<ad::Parameter* const> params, const AdamConfig& config) {
  if (!(config.lr > 0.0) || !(config.beta1 > 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 > 0.0 && config.beta2 < 1.0) || !(config.epsilon > 0.0) || config.weight_decay < 0.0) {
    throw ConfigError("adam: lr, epsilon must be > 0, betas in (0,1), weight_decay >= 0");
  }
  AdamState state;
  state.config = config;
  for (const ad::Parameter* p : params) {
    state.first_moment.emplace_back(p->value.shape());
    state.second_moment.emplace_back(p->value.shape());
  }
  return state;
}

void adam_step(std::span<ad::Parameter* const> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ContractError("adam: state was built for a different parameter list");
  }
  const AdamConfig& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (!m.same_shape(p.value)) throw DimensionError("adam: moment shape differs for " + p.name);
    if (!p.grad.same_shape(p.value)) p.zero_grad();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i] + c.weight_decay * p.value[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

double grad_norm(std::span<ad::Parameter* const> params) {
  double s = 0.0;
  for (const ad::Parameter* p : params)
    for (double g : p->grad.values()) s += g * g;
  return std::sqrt(s);
}

}  // namespace ust::optim
