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

#ifndef VISA_MODELS_GAUSSIAN_HPP
#define VISA_MODELS_GAUSSIAN_HPP

#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/rng.hpp"

namespace visa {

/// Multivariate normal N(mean, covariance) with a cached Cholesky factor.
class GaussianTarget {
 public:
  GaussianTarget(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double log_normalizer = 0.0)
      : mean_(std::move(mean)), cov_(std::move(covariance)), log_z_(log_normalizer) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
      throw std::invalid_argument("GaussianTarget: covariance shape does not match the mean");
    }
    if (!cov_.isApprox(cov_.transpose(), 1e-12)) {
      throw std::invalid_argument("GaussianTarget: covariance is not symmetric");
    }
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) {
      throw std::invalid_argument("GaussianTarget: covariance is not positive definite");
    }
    log_det_ = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  static GaussianTarget diagonal(Eigen::VectorXd mean, const Eigen::VectorXd& variances) {
    return GaussianTarget(std::move(mean), variances.asDiagonal().toDenseMatrix());
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return mean_.size(); }
  [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& cholesky() const noexcept { return llt_; }
  [[nodiscard]] double log_det() const noexcept { return log_det_; }
  /// Added to the normalized log-density, so the target integrates to exp(log_normalizer).
  [[nodiscard]] double log_normalizer() const noexcept { return log_z_; }

  [[nodiscard]] double log_density(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd u = llt_.matrixL().solve(z - mean_);
    return log_z_ - static_cast<double>(dim()) * kLogSqrt2Pi - 0.5 * log_det_ - 0.5 * u.squaredNorm();
  }

  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& z) const { return -llt_.solve(z - mean_); }

  /// Exact draws, one per row.
  [[nodiscard]] Eigen::MatrixXd sample(Eigen::Index n, Rng& rng) const {
    const Eigen::MatrixXd l = llt_.matrixL();
    Eigen::MatrixXd out(n, dim());
    Eigen::VectorXd xi(dim());
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index i = 0; i < dim(); ++i) {
        xi[i] = rng.normal();
      }
      out.row(r) = (mean_ + l * xi).transpose();
    }
    return out;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  double log_z_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

/// Wraps a Gaussian target as a black-box model with an analytic gradient.
inline Model make_gaussian_model(std::shared_ptr<const GaussianTarget> target) {
  const Eigen::Index d = target->dim();
  return Model(
      d, [target](const Eigen::VectorXd& z, Rng&) { return target->log_density(z); },
      [target](const Eigen::VectorXd& z) { return target->gradient(z); });
}

/// Variances linearly spaced from sigma_min (first entry) to sigma_max (last entry).
inline Eigen::VectorXd make_diag_cov(Eigen::Index dim, double sigma_min, double sigma_max) {
  if (dim < 2 || !(sigma_min > 0.0) || sigma_max < sigma_min) {
    throw std::invalid_argument("make_diag_cov: need D >= 2 and 0 < sigma_min <= sigma_max");
  }
  Eigen::VectorXd out(dim);
  const double step = (sigma_max - sigma_min) / static_cast<double>(dim - 1);
  for (Eigen::Index i = 0; i < dim; ++i) {
    out[i] = sigma_min + static_cast<double>(i) * step;
  }
  return out;
}

/// M / ||M||_F + 0.1 I with M = A A^T and A_ij ~ U(0, 1).
inline Eigen::MatrixXd make_dense_cov(Eigen::Index dim, Rng& rng) {
  if (dim < 2) {
    throw std::invalid_argument("make_dense_cov: need D >= 2");
  }
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      a(i, j) = rng.uniform();
    }
  }
  const Eigen::MatrixXd m = a * a.transpose();
  Eigen::MatrixXd c = m / m.norm();
  c.diagonal().array() += 0.1;
  return 0.5 * (c + c.transpose());
}

}  // namespace visa

#endif  // VISA_MODELS_GAUSSIAN_HPP
