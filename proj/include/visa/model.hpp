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

#ifndef VISA_MODEL_HPP
#define VISA_MODEL_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/rng.hpp"

namespace visa {

/**
 * Black-box log-joint log p(y, z) with evaluation accounting.
 *
 * Every call to `log_joint` (or `log_joint_and_gradient`) counts as exactly
 * one model evaluation, whatever the cost of the call. The counter is atomic
 * so batches may be evaluated concurrently. Stochastic models (pseudo-marginal
 * likelihoods) draw from the stream passed in; deterministic models ignore it.
 * Non-finite results are reported as -inf (outside the model support).
 */
class Model {
 public:
  using LogJoint = std::function<double(const Eigen::VectorXd&, Rng&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  Model(Eigen::Index dim, LogJoint log_joint, Gradient gradient = {})
      : dim_(dim), log_joint_(std::move(log_joint)), gradient_(std::move(gradient)) {
    if (dim_ < 1) {
      throw std::invalid_argument("Model: dimension must be positive");
    }
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }

  double log_joint(const Eigen::VectorXd& z, Rng& rng) const {
    evals_.fetch_add(1, std::memory_order_relaxed);
    const double value = log_joint_(z, rng);
    return std::isfinite(value) ? value : kNegInf;
  }

  /// Convenience for deterministic models.
  double log_joint(const Eigen::VectorXd& z) const {
    Rng rng(0);
    return log_joint(z, rng);
  }

  [[nodiscard]] bool has_gradient() const noexcept { return static_cast<bool>(gradient_); }

  /// log p(y, z) and its gradient in z; one model evaluation.
  std::pair<double, Eigen::VectorXd> log_joint_and_gradient(const Eigen::VectorXd& z, Rng& rng) const {
    if (!gradient_) {
      throw UnsupportedModelError("model does not expose an analytic gradient");
    }
    evals_.fetch_add(1, std::memory_order_relaxed);
    const double value = log_joint_(z, rng);
    return {std::isfinite(value) ? value : kNegInf, gradient_(z)};
  }

  [[nodiscard]] std::uint64_t eval_count() const noexcept { return evals_.load(std::memory_order_relaxed); }

 private:
  Eigen::Index dim_;
  LogJoint log_joint_;
  Gradient gradient_;
  mutable std::atomic<std::uint64_t> evals_{0};
};

}  // namespace visa

#endif  // VISA_MODEL_HPP
