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

#ifndef VISA_MODELS_PARTICLE_FILTER_HPP
#define VISA_MODELS_PARTICLE_FILTER_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "visa/family.hpp"
#include "visa/rng.hpp"

namespace visa {

/**
 * A state-space model the bootstrap filter can run on.
 *
 * Observations are indexed t = 0 .. horizon() - 1; observation 0 is emitted by
 * the initial state.
 */
template <class M>
concept StateSpaceModel = requires(const M& m, const typename M::State& s, Rng& rng, int t) {
  { m.horizon() } -> std::convertible_to<int>;
  { m.sample_initial(rng) } -> std::same_as<typename M::State>;
  { m.sample_transition(s, rng) } -> std::same_as<typename M::State>;
  { m.log_observation(s, t) } -> std::convertible_to<double>;
};

enum class Resampling { multinomial, systematic };

inline std::string_view to_string(Resampling r) { return r == Resampling::multinomial ? "multinomial" : "systematic"; }

namespace detail {

// Ancestor indices for normalized weights `w` (sum 1), written into `ancestors`.
inline void resample(const std::vector<double>& w, Resampling scheme, Rng& rng, std::vector<std::size_t>& ancestors) {
  const std::size_t m = w.size();
  ancestors.resize(m);
  std::vector<double> points(m);
  if (scheme == Resampling::systematic) {
    const double u0 = rng.uniform();
    for (std::size_t k = 0; k < m; ++k) {
      points[k] = (static_cast<double>(k) + u0) / static_cast<double>(m);
    }
  } else {
    // Sorted iid uniforms from normalized cumulative exponential spacings.
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      total += -std::log1p(-rng.uniform());
      points[k] = total;
    }
    total += -std::log1p(-rng.uniform());
    for (auto& p : points) {
      p /= total;
    }
  }
  double cumulative = w[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < m; ++k) {
    while (points[k] > cumulative && j + 1 < m) {
      ++j;
      cumulative += w[j];
    }
    ancestors[k] = j;
  }
}

}  // namespace detail

/**
 * Bootstrap particle filter estimate of log p(y_{0:T}).
 *
 * Particles start from the initial distribution, are weighted by each
 * observation, resampled, and moved through the transition prior. The
 * returned value is sum_t log((1/M) sum_m w_t^m), whose exponential is an
 * unbiased estimate of the marginal likelihood. Returns -inf if every
 * particle has zero weight at some step.
 */
template <StateSpaceModel M>
double bootstrap_pf(const M& model, int particles, Rng& rng, Resampling scheme = Resampling::multinomial) {
  if (particles < 2) {
    throw std::invalid_argument("bootstrap_pf: at least two particles are required");
  }
  using State = typename M::State;
  const auto m = static_cast<std::size_t>(particles);
  std::vector<State> current(m);
  std::vector<State> next(m);
  std::vector<double> log_w(m);
  std::vector<double> w(m);
  std::vector<std::size_t> ancestors;
  for (auto& s : current) {
    s = model.sample_initial(rng);
  }
  double log_z = 0.0;
  const int horizon = model.horizon();
  for (int t = 0; t < horizon; ++t) {
    if (t > 0) {
      detail::resample(w, scheme, rng, ancestors);
      for (std::size_t k = 0; k < m; ++k) {
        next[k] = model.sample_transition(current[ancestors[k]], rng);
      }
      current.swap(next);
    }
    double max_lw = kNegInf;
    for (std::size_t k = 0; k < m; ++k) {
      log_w[k] = model.log_observation(current[k], t);
      max_lw = std::max(max_lw, log_w[k]);
    }
    if (!std::isfinite(max_lw)) {
      return kNegInf;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      w[k] = std::exp(log_w[k] - max_lw);
      sum += w[k];
    }
    for (auto& x : w) {
      x /= sum;
    }
    log_z += max_lw + std::log(sum / static_cast<double>(m));
  }
  return log_z;
}

}  // namespace visa

#endif  // VISA_MODELS_PARTICLE_FILTER_HPP
