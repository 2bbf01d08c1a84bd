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

#ifndef VISA_MODELS_LGSSM_HPP
#define VISA_MODELS_LGSSM_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "visa/models/particle_filter.hpp"
#include "visa/rng.hpp"

namespace visa {

/**
 * Scalar linear-Gaussian state-space model:
 * x_0 ~ N(m0, p0), x_t = a x_{t-1} + N(0, q), y_t = c x_t + N(0, r).
 * Variances q and r must be positive. Observations start at t = 0.
 */
struct LgssmModel {
  double a = 0.9;
  double q = 0.5;
  double c = 1.0;
  double r = 1.0;
  double m0 = 0.0;
  double p0 = 1.0;
  std::vector<double> y;

  using State = double;

  [[nodiscard]] int horizon() const noexcept { return static_cast<int>(y.size()); }
  [[nodiscard]] double sample_initial(Rng& rng) const { return m0 + std::sqrt(p0) * rng.normal(); }
  [[nodiscard]] double sample_transition(double x, Rng& rng) const { return a * x + std::sqrt(q) * rng.normal(); }
  [[nodiscard]] double log_observation(double x, int t) const {
    const double e = y[static_cast<std::size_t>(t)] - c * x;
    return -0.5 * std::log(2.0 * std::numbers::pi * r) - 0.5 * e * e / r;
  }
};

static_assert(StateSpaceModel<LgssmModel>);

/// Draws a state path and observations of length `horizon`; only `y` of the result is populated.
inline std::vector<double> lgssm_simulate(const LgssmModel& model, int horizon, Rng& rng) {
  std::vector<double> y(static_cast<std::size_t>(horizon));
  double x = model.sample_initial(rng);
  for (int t = 0; t < horizon; ++t) {
    if (t > 0) {
      x = model.sample_transition(x, rng);
    }
    y[static_cast<std::size_t>(t)] = model.c * x + std::sqrt(model.r) * rng.normal();
  }
  return y;
}

/// Exact log p(y_{0:T}) by the prediction-error decomposition.
inline double kalman_loglik(const LgssmModel& model) {
  double mean = model.m0;
  double var = model.p0;
  double total = 0.0;
  for (int t = 0; t < model.horizon(); ++t) {
    if (t > 0) {
      mean = model.a * mean;
      var = model.a * model.a * var + model.q;
    }
    const double s = model.c * model.c * var + model.r;
    const double e = model.y[static_cast<std::size_t>(t)] - model.c * mean;
    total += -0.5 * std::log(2.0 * std::numbers::pi * s) - 0.5 * e * e / s;
    const double gain = var * model.c / s;
    mean += gain * e;
    var *= (1.0 - gain * model.c);
  }
  return total;
}

}  // namespace visa

#endif  // VISA_MODELS_LGSSM_HPP
