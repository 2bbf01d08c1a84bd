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

#ifndef VISA_WEIGHTS_HPP
#define VISA_WEIGHTS_HPP

#include <cmath>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/family.hpp"

namespace visa {

/// log sum exp, -inf for an empty or all -inf input.
inline double log_sum_exp(const Eigen::VectorXd& log_w) {
  if (log_w.size() == 0) {
    return kNegInf;
  }
  const double m = log_w.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((log_w.array() - m).exp().sum());
}

/// Self-normalized weights exp(log_w - logsumexp(log_w)). Entries at -inf get weight exactly 0.
inline Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& log_w) {
  if (log_w.size() == 0 || (log_w.array() == kNegInf).all()) {
    throw DegenerateWeightsError();
  }
  if (log_w.array().isNaN().any() || (log_w.array() == kPosInf).any()) {
    throw DegenerateWeightsError("log weights contain NaN or +inf");
  }
  const double m = log_w.maxCoeff();
  // Vectorized exp may return a denormal for -inf; zero those entries explicitly.
  Eigen::VectorXd w = (log_w.array() == kNegInf).select(0.0, (log_w.array() - m).exp()).matrix();
  w /= w.sum();
  return w;
}

/// Normalized effective sample size 1 / (N sum w_i^2) of normalized weights, in (0, 1].
inline double ess(const Eigen::VectorXd& weights) {
  const auto n = static_cast<double>(weights.size());
  const double total = weights.sum();
  return total * total / (n * weights.squaredNorm());
}

/// Normalized ESS of unnormalized weights given in log space; 0 when every weight is zero.
inline double ess_from_log(const Eigen::VectorXd& log_v) {
  const double m = log_v.size() == 0 ? kNegInf : log_v.maxCoeff();
  if (!std::isfinite(m)) {
    return 0.0;
  }
  const Eigen::ArrayXd v = (log_v.array() == kNegInf).select(0.0, (log_v.array() - m).exp());
  return v.sum() * v.sum() / (static_cast<double>(v.size()) * v.square().sum());
}

}  // namespace visa

#endif  // VISA_WEIGHTS_HPP
