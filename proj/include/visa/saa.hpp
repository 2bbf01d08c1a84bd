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

#ifndef VISA_SAA_HPP
#define VISA_SAA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/rng.hpp"
#include "visa/weights.hpp"

/**
 * \file
 * \brief Sample-average approximation of the forward-KL upper bound.
 *
 * An SaaState fixes N samples drawn from a proposal q(.; phi_tilde) together
 * with their log-joints and proposal log-densities. The surrogate
 *
 *     L(phi; phi_tilde) = sum_i w_i (log p(y, z_i) - log q(z_i; phi))
 *
 * and its gradient are then deterministic functions of phi that never touch
 * the model again. `trust_score` measures how far phi has drifted from the
 * proposal as the normalized ESS of q(z_i; phi) / q(z_i; phi_tilde).
 */

namespace visa {

/// log p(y, z_i) for every row, each row using its own child stream seeded from `seeds[i]`.
/// Results are ordered by row, so the output does not depend on `threads`.
inline Eigen::VectorXd evaluate_rows(const Model& model, const Eigen::MatrixXd& samples,
                                     const std::vector<std::uint64_t>& seeds, unsigned threads = 1) {
  const Eigen::Index n = samples.rows();
  Eigen::VectorXd out(n);
  auto work = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      Rng stream(seeds[static_cast<std::size_t>(i)]);
      out[i] = model.log_joint(samples.row(i).transpose(), stream);
    }
  };
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const Eigen::Index chunk = (n + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    const Eigen::Index begin = k * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin < end) {
      pool.emplace_back(work, begin, end);
    }
  }
  return out;
}

/// One fixed sample set with cached model and proposal values. Immutable once built.
class SaaState {
 public:
  SaaState(VariationalParams proposal, Eigen::MatrixXd samples, Eigen::VectorXd log_joint, Eigen::VectorXd log_q)
      : proposal_(std::move(proposal)),
        samples_(std::move(samples)),
        log_joint_(std::move(log_joint)),
        log_q_(std::move(log_q)) {
    Eigen::VectorXd log_w(log_joint_.size());
    for (Eigen::Index i = 0; i < log_w.size(); ++i) {
      // A draw the proposal itself cannot represent (saturated transform) carries no weight.
      log_w[i] = (std::isfinite(log_q_[i]) && std::isfinite(log_joint_[i])) ? log_joint_[i] - log_q_[i] : kNegInf;
    }
    weights_ = normalize_log_weights(log_w);
  }

  [[nodiscard]] const VariationalParams& proposal() const noexcept { return proposal_; }
  [[nodiscard]] const Eigen::MatrixXd& samples() const noexcept { return samples_; }
  [[nodiscard]] const Eigen::VectorXd& cached_log_joint() const noexcept { return log_joint_; }
  [[nodiscard]] const Eigen::VectorXd& cached_log_q_proposal() const noexcept { return log_q_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return samples_.rows(); }

 private:
  VariationalParams proposal_;
  Eigen::MatrixXd samples_;
  Eigen::VectorXd log_joint_;
  Eigen::VectorXd log_q_;
  Eigen::VectorXd weights_;
};

/// Draws N samples from the proposal and evaluates the model exactly N times.
inline SaaState build_saa(const Model& model, const VariationalParams& proposal, Eigen::Index n, Rng& rng,
                          unsigned threads = 1) {
  if (n < 2) {
    throw std::invalid_argument("build_saa: at least two samples are required");
  }
  Eigen::MatrixXd z = sample(proposal, n, rng);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (auto& s : seeds) {
    s = rng.next_u64();
  }
  Eigen::VectorXd log_joint = evaluate_rows(model, z, seeds, threads);
  Eigen::VectorXd log_q = log_density_rows(proposal, z);
  return SaaState(proposal, std::move(z), std::move(log_joint), std::move(log_q));
}

/// Surrogate forward-KL upper bound at `params`; +inf if a weighted sample leaves the support of q.
inline double saa_objective(const SaaState& state, const VariationalParams& params) {
  const detail::BaseGaussian g(params);
  double total = 0.0;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double w = state.weights()[i];
    if (w == 0.0) {
      continue;
    }
    const double lq = detail::log_density(g, params.transform(), state.samples().row(i).transpose());
    if (lq == kNegInf) {
      return kPosInf;
    }
    total += w * (state.cached_log_joint()[i] - lq);
  }
  return total;
}

/// Exact gradient of `saa_objective`: -sum_i w_i grad log q(z_i; phi).
inline Eigen::VectorXd saa_gradient(const SaaState& state, const VariationalParams& params) {
  const detail::BaseGaussian g(params);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.num_params());
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double w = state.weights()[i];
    if (w == 0.0) {
      continue;
    }
    grad -= w * detail::score_gradient(g, params, state.samples().row(i).transpose());
  }
  return grad;
}

/// Normalized ESS of v_i = q(z_i; phi) / q(z_i; phi_tilde); out-of-support samples count as v_i = 0.
inline double trust_score(const SaaState& state, const VariationalParams& params) {
  const Eigen::VectorXd log_q = log_density_rows(params, state.samples());
  Eigen::VectorXd log_v(state.size());
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double proposal = state.cached_log_q_proposal()[i];
    log_v[i] = (std::isfinite(proposal) && log_q[i] != kNegInf) ? log_q[i] - proposal : kNegInf;
  }
  return ess_from_log(log_v);
}

}  // namespace visa

#endif  // VISA_SAA_HPP
