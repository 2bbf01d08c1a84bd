// Copyright 2026 The VISA Authors.
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

#ifndef VISA_OPTIM_HPP
#define VISA_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "visa/error.hpp"

namespace visa {

enum class OptimizerKind { sgd, adam };

inline std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter optimizer state. Adam moments start empty and are sized on the first step.
struct OptimizerState {
  OptimizerSpec spec;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t timestep = 0;
};

inline OptimizerState make_optimizer(const OptimizerSpec& spec) { return OptimizerState{spec, {}, {}, 0}; }

/// One descent step. Pure: returns the new parameters and state.
inline std::pair<Eigen::VectorXd, OptimizerState> step(const OptimizerState& state, const Eigen::VectorXd& params,
                                                       const Eigen::VectorXd& gradient) {
  if (gradient.size() != params.size()) {
    throw std::invalid_argument("optimizer step: gradient and parameter sizes differ");
  }
  if (!gradient.allFinite()) {
    throw NonFiniteGradientError();
  }
  OptimizerState next = state;
  const auto& s = state.spec;
  if (s.kind == OptimizerKind::sgd) {
    ++next.timestep;
    return {params - s.learning_rate * gradient, std::move(next)};
  }
  if (next.first_moment.size() != params.size()) {
    next.first_moment = Eigen::VectorXd::Zero(params.size());
    next.second_moment = Eigen::VectorXd::Zero(params.size());
  }
  ++next.timestep;
  next.first_moment = s.beta1 * next.first_moment + (1.0 - s.beta1) * gradient;
  next.second_moment = s.beta2 * next.second_moment + (1.0 - s.beta2) * gradient.cwiseAbs2();
  const auto t = static_cast<double>(next.timestep);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  const Eigen::ArrayXd m_hat = next.first_moment.array() / c1;
  const Eigen::ArrayXd v_hat = next.second_moment.array() / c2;
  Eigen::VectorXd updated = params - (s.learning_rate * m_hat / (v_hat.sqrt() + s.epsilon)).matrix();
  return {std::move(updated), std::move(next)};
}

}  // namespace visa

#endif  // VISA_OPTIM_HPP
