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

#ifndef VISA_ESTIMATORS_HPP
#define VISA_ESTIMATORS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/rng.hpp"
#include "visa/saa.hpp"
#include "visa/weights.hpp"

namespace visa {

/// A stochastic gradient (descent direction on the method's objective) and what it cost.
struct GradEstimate {
  Eigen::VectorXd gradient;
  std::uint64_t evals = 0;
  double ess = 1.0;   ///< normalized ESS of the importance weights (1 when unweighted)
  double loss = 0.0;  ///< batch estimate of the objective at the current parameters
};

/// Importance-weighted forward-KL gradient from a fresh batch: -sum_i w_i grad log q(z_i).
inline GradEstimate iwfvi_gradient(const Model& model, const VariationalParams& params, Eigen::Index n, Rng& rng,
                                   unsigned threads = 1) {
  const SaaState batch = build_saa(model, params, n, rng, threads);
  return GradEstimate{saa_gradient(batch, params), static_cast<std::uint64_t>(n), ess(batch.weights()),
                      saa_objective(batch, params)};
}

/**
 * Score-function gradient of the reverse KL, E_q[grad log q (log q - log p)].
 *
 * With `leave_one_out` each sample's learning signal is centred on the mean
 * signal of the other n - 1 samples, which keeps the estimator unbiased.
 */
inline GradEstimate bbvi_sf_gradient(const Model& model, const VariationalParams& params, Eigen::Index n, Rng& rng,
                                     bool leave_one_out = true, unsigned threads = 1) {
  if (n < 2) {
    throw std::invalid_argument("bbvi_sf_gradient: at least two samples are required");
  }
  const Eigen::MatrixXd z = sample(params, n, rng);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (auto& s : seeds) {
    s = rng.next_u64();
  }
  const Eigen::VectorXd log_p = evaluate_rows(model, z, seeds, threads);
  const detail::BaseGaussian g(params);
  Eigen::VectorXd signal(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    signal[i] = detail::log_density(g, params.transform(), z.row(i).transpose()) - log_p[i];
  }
  const double total = signal.sum();
  const auto nd = static_cast<double>(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.num_params());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double baseline = leave_one_out ? (total - signal[i]) / (nd - 1.0) : 0.0;
    grad += (signal[i] - baseline) * detail::score_gradient(g, params, z.row(i).transpose());
  }
  grad /= nd;
  return GradEstimate{std::move(grad), static_cast<std::uint64_t>(n), 1.0, total / nd};
}

/// Single-sample reparameterized gradient of the reverse KL. Needs a model with an analytic gradient.
inline GradEstimate bbvi_rp_gradient(const Model& model, const VariationalParams& params, Rng& rng) {
  if (!model.has_gradient()) {
    throw UnsupportedModelError("bbvi_rp_gradient: model has no analytic gradient");
  }
  const Eigen::Index d = params.dim();
  Eigen::VectorXd xi(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    xi[i] = rng.normal();
  }
  const PathwiseSample ps = pathwise_sample(params, xi);
  Rng stream(rng.next_u64());
  const auto [log_p, grad_z] = model.log_joint_and_gradient(ps.z, stream);

  // Total derivative of log q(T(xi)) along the path: -1 per log-diagonal entry of L,
  // minus the slope of log|f'| carried through dx/dphi.
  const auto& t = params.transform();
  Eigen::VectorXd grad_log_q = Eigen::VectorXd::Zero(params.num_params());
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index diag = params.covariance_kind() == CovarianceKind::diagonal
                                  ? d + i
                                  : VariationalParams::tri_index(d, i, i);
    grad_log_q[diag] -= 1.0;
    const double slope = t.log_abs_derivative_slope(ps.base[i]);
    if (slope != 0.0) {
      grad_log_q -= slope / t.derivative(i, ps.base[i]) * ps.jacobian.row(i).transpose();
    }
  }
  Eigen::VectorXd grad = grad_log_q - ps.jacobian.transpose() * grad_z;
  return GradEstimate{std::move(grad), 1, 1.0, log_density(params, ps.z) - log_p};
}

}  // namespace visa

#endif  // VISA_ESTIMATORS_HPP
