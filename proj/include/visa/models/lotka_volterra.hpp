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

#ifndef VISA_MODELS_LOTKA_VOLTERRA_HPP
#define VISA_MODELS_LOTKA_VOLTERRA_HPP

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/rng.hpp"

namespace visa {

using State2 = std::array<double, 2>;

/// Interaction parameters (alpha, beta, gamma, delta) of the predator-prey system.
struct LvParams {
  double alpha = 1.0;
  double beta = 0.05;
  double gamma = 1.0;
  double delta = 0.05;
};

/// (du/dt, dv/dt) = ((alpha - beta v) u, (-gamma + delta u) v) for prey u and predators v.
constexpr State2 lv_rhs(double u, double v, const LvParams& p) noexcept {
  return {(p.alpha - p.beta * v) * u, (-p.gamma + p.delta * u) * v};
}

/// Conserved quantity delta u - gamma ln u + beta v - alpha ln v of the exact flow.
inline double lv_first_integral(double u, double v, const LvParams& p) {
  return p.delta * u - p.gamma * std::log(u) + p.beta * v - p.alpha * std::log(v);
}

/**
 * Classical fixed-step RK4 from t = 0 to `t_end`, returning the state at t = 1, 2, ..., t_end.
 *
 * `rhs(state) -> state` must be autonomous. 1/h must be an integer so every
 * output time falls exactly on the step grid. Throws IntegrationError as soon
 * as the state stops being finite.
 */
template <class State, class Rhs>
std::vector<State> rk4_integrate(Rhs&& rhs, State z0, double h, int t_end) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("rk4_integrate: step must be positive");
  }
  const auto per_unit = static_cast<long>(std::llround(1.0 / h));
  if (per_unit < 1 || std::abs(static_cast<double>(per_unit) * h - 1.0) > 1e-9) {
    throw std::invalid_argument("rk4_integrate: 1/h must be an integer");
  }
  auto axpy = [](const State& x, double a, const State& y) {
    State out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += a * y[i];
    }
    return out;
  };
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(t_end));
  State z = z0;
  for (int t = 1; t <= t_end; ++t) {
    for (long s = 0; s < per_unit; ++s) {
      const State k1 = rhs(z);
      const State k2 = rhs(axpy(z, 0.5 * h, k1));
      const State k3 = rhs(axpy(z, 0.5 * h, k2));
      const State k4 = rhs(axpy(z, h, k3));
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    for (double x : z) {
      if (!std::isfinite(x)) {
        throw IntegrationError("rk4_integrate: state became non-finite");
      }
    }
    out.push_back(z);
  }
  return out;
}

inline std::vector<State2> lv_trajectory(const State2& z0, const LvParams& p, double h, int t_end) {
  return rk4_integrate([&p](const State2& s) { return lv_rhs(s[0], s[1], p); }, z0, h, t_end);
}

/// Observations at t = 1..T, row t-1 = (prey, predator).
struct LvData {
  Eigen::MatrixXd y;
};

/**
 * Posterior over z = (u0, v0, alpha, beta, gamma, delta) on the natural scale.
 *
 * Priors: u0, v0 ~ LogNormal(log 10, 1); alpha, gamma ~ Normal(1, 0.5);
 * beta, delta ~ Normal(0.05, 0.05). Each observation is
 * LogNormal(log z_t, sigma) around the RK4 trajectory, with sigma fixed.
 */
struct LotkaVolterraModel {
  LvData data;
  double sigma = 0.25;
  double step = 0.01;

  [[nodiscard]] int horizon() const noexcept { return static_cast<int>(data.y.rows()); }
};

inline double normal_log_pdf(double x, double mean, double sd) {
  const double r = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * r * r;
}

inline double lognormal_log_pdf(double x, double log_median, double sd) {
  if (!(x > 0.0)) {
    return kNegInf;
  }
  const double lx = std::log(x);
  return normal_log_pdf(lx, log_median, sd) - lx;
}

inline double lv_log_prior(const Eigen::VectorXd& z) {
  const double log10 = std::log(10.0);
  return lognormal_log_pdf(z[0], log10, 1.0) + lognormal_log_pdf(z[1], log10, 1.0) + normal_log_pdf(z[2], 1.0, 0.5) +
         normal_log_pdf(z[3], 0.05, 0.05) + normal_log_pdf(z[4], 1.0, 0.5) + normal_log_pdf(z[5], 0.05, 0.05);
}

inline double lv_log_joint(const LotkaVolterraModel& model, const Eigen::VectorXd& z) {
  if (z.size() != 6) {
    throw std::invalid_argument("lv_log_joint: latent vector must have length 6");
  }
  if (!(z[0] > 0.0) || !(z[1] > 0.0)) {
    return kNegInf;
  }
  const double prior = lv_log_prior(z);
  const LvParams p{z[2], z[3], z[4], z[5]};
  std::vector<State2> traj;
  try {
    traj = lv_trajectory({z[0], z[1]}, p, model.step, model.horizon());
  } catch (const IntegrationError&) {
    return kNegInf;
  }
  double lik = 0.0;
  for (int t = 0; t < model.horizon(); ++t) {
    for (int s = 0; s < 2; ++s) {
      const double pred = traj[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
      if (!(pred > 0.0)) {
        return kNegInf;
      }
      lik += lognormal_log_pdf(model.data.y(t, s), std::log(pred), model.sigma);
    }
  }
  const double out = prior + lik;
  return std::isfinite(out) ? out : kNegInf;
}

inline Model make_lv_model(std::shared_ptr<const LotkaVolterraModel> model) {
  return Model(6, [model](const Eigen::VectorXd& z, Rng&) { return lv_log_joint(*model, z); });
}

/// Integrates from the true state and applies multiplicative noise exp(sigma eps) per species.
inline LvData lv_simulate_data(const LvParams& theta, const State2& z0, double sigma, int t_obs, Rng& rng,
                               double step = 0.01) {
  if (!(z0[0] > 0.0) || !(z0[1] > 0.0)) {
    throw std::invalid_argument("lv_simulate_data: populations must be positive");
  }
  const auto traj = lv_trajectory(z0, theta, step, t_obs);
  LvData out{Eigen::MatrixXd(t_obs, 2)};
  for (int t = 0; t < t_obs; ++t) {
    for (int s = 0; s < 2; ++s) {
      const double eps = rng.normal();
      out.y(t, s) = traj[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] * std::exp(sigma * eps);
    }
  }
  return out;
}

/// Starting point: log-normal marginals matching the z0 prior and covering the theta prior.
inline VariationalParams lv_initial_params(CovarianceKind kind = CovarianceKind::full) {
  Eigen::VectorXd mean(6);
  Eigen::VectorXd log_std(6);
  mean << std::log(10.0), std::log(10.0), 0.0, std::log(0.05), 0.0, std::log(0.05);
  log_std << 0.0, 0.0, std::log(0.5), 0.0, std::log(0.5), 0.0;
  return VariationalParams::from_mean_log_std(mean, log_std, kind, Transform::exp());
}

}  // namespace visa

#endif  // VISA_MODELS_LOTKA_VOLTERRA_HPP
