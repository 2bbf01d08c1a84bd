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

#ifndef VISA_METRICS_HPP
#define VISA_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/models/gaussian.hpp"
#include "visa/rng.hpp"

namespace visa {

/// Mean and covariance of a multivariate normal.
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  static GaussianMoments of(const GaussianTarget& target) { return {target.mean(), target.covariance()}; }

  /// Moments of an untransformed variational Gaussian.
  static GaussianMoments of(const VariationalParams& params) {
    if (params.transform().kind() != TransformKind::identity) {
      throw UnsupportedFamilyError("GaussianMoments: transformed families are not Gaussian");
    }
    return {params.mean(), params.base_covariance()};
  }
};

/// KL(p || q) between multivariate normals, in closed form.
inline double gaussian_kl(const GaussianMoments& p, const GaussianMoments& q) {
  const Eigen::Index d = p.mean.size();
  if (q.mean.size() != d || p.covariance.rows() != d || q.covariance.rows() != d) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXd> lq(q.covariance);
  const Eigen::LLT<Eigen::MatrixXd> lp(p.covariance);
  if (lq.info() != Eigen::Success || lp.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian_kl: covariance is not positive definite");
  }
  const Eigen::MatrixXd lq_l = lq.matrixL();
  const Eigen::MatrixXd lp_l = lp.matrixL();
  // tr(Cq^{-1} Cp) = ||Lq^{-1} Lp||_F^2
  const Eigen::MatrixXd a = lq_l.triangularView<Eigen::Lower>().solve(lp_l);
  const Eigen::VectorXd b = lq_l.triangularView<Eigen::Lower>().solve(q.mean - p.mean);
  const double log_det_q = 2.0 * lq_l.diagonal().array().log().sum();
  const double log_det_p = 2.0 * lp_l.diagonal().array().log().sum();
  return 0.5 * (a.squaredNorm() + b.squaredNorm() - static_cast<double>(d) + log_det_q - log_det_p);
}

inline double symmetric_kl(const GaussianMoments& p, const GaussianMoments& q) {
  return gaussian_kl(p, q) + gaussian_kl(q, p);
}

/// Posterior draws with their log-joints, used as an oracle for the forward-KL upper bound.
struct ReferenceSampleSet {
  enum class Provenance { exact, rwmh };

  Eigen::MatrixXd samples;  ///< one draw per row
  Eigen::VectorXd log_joint;
  Provenance provenance = Provenance::exact;
  double acceptance_rate = 1.0;
};

/// (1/N) sum_i (log p(y, z_i) - log q(z_i)) over reference draws; +inf if a draw is outside q's support.
inline double oracle_upper_bound(const ReferenceSampleSet& ref, const VariationalParams& params) {
  if (ref.samples.rows() == 0 || ref.log_joint.size() != ref.samples.rows()) {
    throw std::invalid_argument("oracle_upper_bound: empty or inconsistent reference set");
  }
  const Eigen::VectorXd log_q = log_density_rows(params, ref.samples);
  if ((log_q.array() == kNegInf).any()) {
    return kPosInf;
  }
  return (ref.log_joint - log_q).mean();
}

/// log of the Metropolis acceptance probability for a symmetric proposal.
inline double mh_log_accept(double log_p_current, double log_p_proposal) {
  if (log_p_proposal == kNegInf) {
    return kNegInf;
  }
  return std::min(0.0, log_p_proposal - log_p_current);
}

struct RwmhOptions {
  Eigen::Index n_samples = 10000;
  std::int64_t burn_in = 10000;
  std::int64_t thin = 10;
  /// Per-dimension proposal scale; empty means 2.4 / sqrt(D) in every dimension.
  Eigen::VectorXd step_scale;
  /// Re-estimate the proposal covariance from the chain during burn-in.
  bool adapt = true;
};

/**
 * Gaussian random-walk Metropolis.
 *
 * Proposals are z + c S xi with S lower triangular; initially S = diag(step_scale)
 * and c = 1. With `adapt`, c follows a Robbins-Monro recursion towards 23.4%
 * acceptance during burn-in, and S is periodically reset to the Cholesky factor
 * of (2.38^2 / D) times the empirical covariance of the second half of the
 * chain so far. Both are frozen after burn-in, so the retained chain is a
 * valid Metropolis chain. Keeps every `thin`-th state after burn-in.
 */
inline ReferenceSampleSet rwmh_sample(const Model& model, const Eigen::VectorXd& init, const RwmhOptions& options,
                                      Rng& rng) {
  const Eigen::Index d = init.size();
  Eigen::VectorXd z = init;
  double lp = model.log_joint(z, rng);
  if (lp == kNegInf) {
    throw std::invalid_argument("rwmh_sample: initial point has zero density");
  }
  Eigen::MatrixXd scale = Eigen::MatrixXd::Zero(d, d);
  if (options.step_scale.size() == d) {
    scale.diagonal() = options.step_scale;
  } else {
    scale.diagonal().setConstant(2.4 / std::sqrt(static_cast<double>(d)));
  }
  const std::int64_t thin = std::max<std::int64_t>(1, options.thin);
  const std::int64_t total = options.burn_in + static_cast<std::int64_t>(options.n_samples) * thin;

  ReferenceSampleSet out;
  out.provenance = ReferenceSampleSet::Provenance::rwmh;
  out.samples.resize(options.n_samples, d);
  out.log_joint.resize(options.n_samples);

  std::vector<Eigen::VectorXd> history;
  if (options.adapt) {
    history.reserve(static_cast<std::size_t>(options.burn_in));
  }
  std::int64_t accepted_after_burn_in = 0;
  Eigen::Index kept = 0;
  double log_factor = 0.0;
  Eigen::VectorXd xi(d);
  for (std::int64_t it = 0; it < total; ++it) {
    for (Eigen::Index i = 0; i < d; ++i) {
      xi[i] = rng.normal();
    }
    const Eigen::VectorXd move = scale.triangularView<Eigen::Lower>() * xi;
    const Eigen::VectorXd proposal = z + std::exp(log_factor) * move;
    const double lp_new = model.log_joint(proposal, rng);
    const bool accept = std::log(rng.uniform()) < mh_log_accept(lp, lp_new);
    if (accept) {
      z = proposal;
      lp = lp_new;
    }
    if (it < options.burn_in) {
      if (options.adapt) {
        // Robbins-Monro on a global scale towards acceptance 0.234.
        log_factor += ((accept ? 1.0 : 0.0) - 0.234) / std::sqrt(static_cast<double>(it) + 1.0);
        history.push_back(z);
        const auto n_hist = static_cast<std::int64_t>(history.size());
        if (n_hist >= 1000 && n_hist % 500 == 0) {
          const auto begin = static_cast<std::size_t>(n_hist / 2);
          const auto m = static_cast<double>(history.size() - begin);
          Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
          for (std::size_t k = begin; k < history.size(); ++k) {
            mean += history[k];
          }
          mean /= m;
          Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
          for (std::size_t k = begin; k < history.size(); ++k) {
            const Eigen::VectorXd c = history[k] - mean;
            cov += c * c.transpose();
          }
          cov /= (m - 1.0);
          if ((cov.diagonal().array() > 0.0).all()) {
            cov.diagonal() *= 1.0 + 1e-8;
            const Eigen::LLT<Eigen::MatrixXd> llt(2.38 * 2.38 / static_cast<double>(d) * cov);
            if (llt.info() == Eigen::Success) {
              scale = llt.matrixL();
              log_factor = 0.0;
            }
          }
        }
      }
      continue;
    }
    if (accept) {
      ++accepted_after_burn_in;
    }
    if ((it - options.burn_in + 1) % thin == 0 && kept < options.n_samples) {
      out.samples.row(kept) = z.transpose();
      out.log_joint[kept] = lp;
      ++kept;
    }
  }
  if (accepted_after_burn_in == 0) {
    throw NonMixingError("rwmh_sample: no proposal accepted after burn-in");
  }
  out.acceptance_rate =
      static_cast<double>(accepted_after_burn_in) / static_cast<double>(total - options.burn_in);
  return out;
}

}  // namespace visa

#endif  // VISA_METRICS_HPP
