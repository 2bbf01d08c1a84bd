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

#ifndef VISA_MODELS_PICKOVER_HPP
#define VISA_MODELS_PICKOVER_HPP

#include <array>
#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/models/particle_filter.hpp"
#include "visa/rng.hpp"

namespace visa {

using State3 = std::array<double, 3>;

/// One step of the 3D Pickover map with parameters (beta, eta).
inline State3 pickover_step(const State3& x, double beta, double eta) {
  return {std::sin(beta * x[1]) - std::cos(2.5 * x[0]) * x[2], std::sin(1.5 * x[0]) * x[2] - std::cos(eta * x[1]),
          std::sin(x[0])};
}

/**
 * Noisy Pickover attractor observed with Gaussian noise.
 *
 * Rows of `y` are observations y_0 .. y_T. The prior on theta = (beta, eta)
 * is uniform on [-3, 3] x [0, 3].
 */
struct PickoverModel {
  Eigen::MatrixXd y;
  int particles = 500;
  double sigma_z = 0.01;
  double sigma_y = 0.2;
  Resampling resampling = Resampling::multinomial;

  static constexpr double kBetaMin = -3.0;
  static constexpr double kBetaMax = 3.0;
  static constexpr double kEtaMin = 0.0;
  static constexpr double kEtaMax = 3.0;

  [[nodiscard]] static bool in_prior_box(double beta, double eta) noexcept {
    return beta >= kBetaMin && beta <= kBetaMax && eta >= kEtaMin && eta <= kEtaMax;
  }

  [[nodiscard]] static double log_prior(double beta, double eta) noexcept {
    return in_prior_box(beta, eta) ? -std::log(18.0) : kNegInf;
  }
};

/// The latent dynamics at fixed theta, in the form the particle filter consumes.
struct PickoverSsm {
  const PickoverModel* model;
  double beta;
  double eta;

  using State = State3;

  [[nodiscard]] int horizon() const noexcept { return static_cast<int>(model->y.rows()); }

  [[nodiscard]] State3 sample_initial(Rng& rng) const { return {rng.normal(), rng.normal(), rng.normal()}; }

  [[nodiscard]] State3 sample_transition(const State3& x, Rng& rng) const {
    State3 next = pickover_step(x, beta, eta);
    for (auto& c : next) {
      c += model->sigma_z * rng.normal();
    }
    return next;
  }

  [[nodiscard]] double log_observation(const State3& x, int t) const {
    const double s = model->sigma_y;
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double r = (model->y(t, k) - x[static_cast<std::size_t>(k)]) / s;
      acc += r * r;
    }
    return -3.0 * (kLogSqrt2Pi + std::log(s)) - 0.5 * acc;
  }
};

static_assert(StateSpaceModel<PickoverSsm>);

/// Pseudo-marginal log p(y, theta): log prior plus one particle-filter likelihood estimate.
inline double pickover_log_joint(const PickoverModel& model, const Eigen::VectorXd& theta, Rng& rng) {
  const double lp = PickoverModel::log_prior(theta[0], theta[1]);
  if (lp == kNegInf) {
    return kNegInf;
  }
  return lp + bootstrap_pf(PickoverSsm{&model, theta[0], theta[1]}, model.particles, rng, model.resampling);
}

inline Model make_pickover_model(std::shared_ptr<const PickoverModel> model) {
  return Model(2, [model](const Eigen::VectorXd& theta, Rng& rng) { return pickover_log_joint(*model, theta, rng); });
}

/// Simulates observations y_0 .. y_T from the state-space model at (beta, eta).
inline Eigen::MatrixXd pickover_simulate(double beta, double eta, int horizon, double sigma_z, double sigma_y,
                                         Rng& rng) {
  Eigen::MatrixXd y(horizon + 1, 3);
  PickoverModel shape;
  shape.sigma_z = sigma_z;
  const PickoverSsm ssm{&shape, beta, eta};
  State3 x = ssm.sample_initial(rng);
  for (int t = 0; t <= horizon; ++t) {
    if (t > 0) {
      x = ssm.sample_transition(x, rng);
    }
    for (int k = 0; k < 3; ++k) {
      y(t, k) = x[static_cast<std::size_t>(k)] + sigma_y * rng.normal();
    }
  }
  return y;
}

/// tanh transform whose image is exactly the open prior box: (3 tanh(x1), 1.5 tanh(x2) + 1.5).
inline Transform pickover_transform() {
  return Transform::tanh_box(Eigen::Vector2d(0.0, 1.5), Eigen::Vector2d(3.0, 1.5));
}

inline VariationalParams pickover_initial_params() {
  return VariationalParams::full(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), pickover_transform());
}

}  // namespace visa

#endif  // VISA_MODELS_PICKOVER_HPP
