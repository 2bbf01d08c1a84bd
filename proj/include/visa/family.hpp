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

#ifndef VISA_FAMILY_HPP
#define VISA_FAMILY_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/rng.hpp"

/**
 * \file
 * \brief Gaussian variational families with an optional elementwise output transform.
 *
 * A sample is z = f(mean + L xi) with xi standard normal, L lower triangular
 * with positive diagonal (diagonal L for the mean-field family) and f one of
 * identity, exp or a tanh map onto an open box. All free parameters live in a
 * single flat vector so optimizers see an unconstrained space: the diagonal
 * of L is stored as its logarithm.
 */

namespace visa {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

enum class TransformKind { identity, exp, tanh_box };

/// Elementwise bijection from R onto the support of the transformed family.
class Transform {
 public:
  Transform() = default;

  static Transform identity() { return Transform{}; }

  static Transform exp() {
    Transform t;
    t.kind_ = TransformKind::exp;
    return t;
  }

  /// Maps x to center + half_width * tanh(x), i.e. onto the open box center +- half_width.
  static Transform tanh_box(Eigen::VectorXd center, Eigen::VectorXd half_width) {
    if (center.size() != half_width.size()) {
      throw std::invalid_argument("tanh_box: center and half_width sizes differ");
    }
    if ((half_width.array() <= 0.0).any()) {
      throw std::invalid_argument("tanh_box: half widths must be positive");
    }
    Transform t;
    t.kind_ = TransformKind::tanh_box;
    t.center_ = std::move(center);
    t.half_width_ = std::move(half_width);
    return t;
  }

  [[nodiscard]] TransformKind kind() const noexcept { return kind_; }
  [[nodiscard]] const Eigen::VectorXd& center() const noexcept { return center_; }
  [[nodiscard]] const Eigen::VectorXd& half_width() const noexcept { return half_width_; }

  [[nodiscard]] double forward(Eigen::Index i, double x) const {
    switch (kind_) {
      case TransformKind::exp:
        return std::exp(x);
      case TransformKind::tanh_box:
        return center_[i] + half_width_[i] * std::tanh(x);
      case TransformKind::identity:
        break;
    }
    return x;
  }

  /// Preimage of z, or nullopt when z is outside the (open) support.
  [[nodiscard]] std::optional<double> inverse(Eigen::Index i, double z) const {
    switch (kind_) {
      case TransformKind::exp:
        if (!(z > 0.0) || !std::isfinite(z)) {
          return std::nullopt;
        }
        return std::log(z);
      case TransformKind::tanh_box: {
        const double u = (z - center_[i]) / half_width_[i];
        if (!(std::abs(u) < 1.0)) {
          return std::nullopt;
        }
        return std::atanh(u);
      }
      case TransformKind::identity:
        break;
    }
    if (!std::isfinite(z)) {
      return std::nullopt;
    }
    return z;
  }

  [[nodiscard]] double derivative(Eigen::Index i, double x) const {
    switch (kind_) {
      case TransformKind::exp:
        return std::exp(x);
      case TransformKind::tanh_box: {
        const double th = std::tanh(x);
        return half_width_[i] * (1.0 - th * th);
      }
      case TransformKind::identity:
        break;
    }
    return 1.0;
  }

  /// log |f'(x)|.
  [[nodiscard]] double log_abs_derivative(Eigen::Index i, double x) const {
    switch (kind_) {
      case TransformKind::exp:
        return x;
      case TransformKind::tanh_box: {
        // log sech^2(x) written to stay finite for large |x|.
        const double ax = std::abs(x);
        return std::log(half_width_[i]) + 2.0 * (std::numbers::ln2 - ax - std::log1p(std::exp(-2.0 * ax)));
      }
      case TransformKind::identity:
        break;
    }
    return 0.0;
  }

  /// d/dx log |f'(x)|.
  [[nodiscard]] double log_abs_derivative_slope(double x) const {
    switch (kind_) {
      case TransformKind::exp:
        return 1.0;
      case TransformKind::tanh_box:
        return -2.0 * std::tanh(x);
      case TransformKind::identity:
        break;
    }
    return 0.0;
  }

 private:
  TransformKind kind_ = TransformKind::identity;
  Eigen::VectorXd center_;
  Eigen::VectorXd half_width_;
};

enum class CovarianceKind { diagonal, full };

/**
 * Parameters phi of one member of a variational family.
 *
 * Flat layout: `[mean (D) | scale]`. For the diagonal family the scale block
 * holds log standard deviations. For the full family it holds the lower
 * triangle of the Cholesky factor row by row, entry (i, j) at
 * D + i(i+1)/2 + j, with diagonal entries stored as logs.
 */
class VariationalParams {
 public:
  static Eigen::Index num_params(Eigen::Index dim, CovarianceKind kind) noexcept {
    return kind == CovarianceKind::diagonal ? 2 * dim : dim + dim * (dim + 1) / 2;
  }

  static VariationalParams diagonal(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                    Transform transform = Transform::identity()) {
    if (mean.size() != log_std.size() || mean.size() == 0) {
      throw std::invalid_argument("diagonal family: mean and log_std must be non-empty and equally sized");
    }
    Eigen::VectorXd flat(2 * mean.size());
    flat << mean, log_std;
    return VariationalParams(mean.size(), CovarianceKind::diagonal, std::move(transform), std::move(flat));
  }

  /// `lower` must be lower triangular with a strictly positive diagonal; the upper triangle is ignored.
  static VariationalParams full(const Eigen::VectorXd& mean, const Eigen::MatrixXd& lower,
                                Transform transform = Transform::identity()) {
    const Eigen::Index d = mean.size();
    if (d == 0 || lower.rows() != d || lower.cols() != d) {
      throw std::invalid_argument("full family: scale factor must be D x D");
    }
    Eigen::VectorXd flat(num_params(d, CovarianceKind::full));
    flat.head(d) = mean;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(lower(i, i) > 0.0)) {
        throw std::invalid_argument("full family: scale factor diagonal must be positive");
      }
      for (Eigen::Index j = 0; j <= i; ++j) {
        flat[tri_index(d, i, j)] = (i == j) ? std::log(lower(i, i)) : lower(i, j);
      }
    }
    return VariationalParams(d, CovarianceKind::full, std::move(transform), std::move(flat));
  }

  /// Isotropic starting point: given mean, every standard deviation exp(log_std), zero correlations.
  static VariationalParams isotropic(const Eigen::VectorXd& mean, double log_std, CovarianceKind kind,
                                     Transform transform = Transform::identity()) {
    const Eigen::VectorXd ls = Eigen::VectorXd::Constant(mean.size(), log_std);
    return from_mean_log_std(mean, ls, kind, std::move(transform));
  }

  static VariationalParams from_mean_log_std(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                             CovarianceKind kind, Transform transform = Transform::identity()) {
    if (kind == CovarianceKind::diagonal) {
      return diagonal(mean, log_std, std::move(transform));
    }
    return full(mean, log_std.array().exp().matrix().asDiagonal().toDenseMatrix(), std::move(transform));
  }

  /// Same family, new flat parameter vector.
  [[nodiscard]] VariationalParams with_flat(Eigen::VectorXd flat) const {
    if (flat.size() != flat_.size()) {
      throw std::invalid_argument("with_flat: parameter vector has the wrong length");
    }
    return VariationalParams(dim_, kind_, transform_, std::move(flat));
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
  [[nodiscard]] Eigen::Index num_params() const noexcept { return flat_.size(); }
  [[nodiscard]] CovarianceKind covariance_kind() const noexcept { return kind_; }
  [[nodiscard]] const Transform& transform() const noexcept { return transform_; }
  [[nodiscard]] const Eigen::VectorXd& flat() const noexcept { return flat_; }

  [[nodiscard]] Eigen::VectorXd mean() const { return flat_.head(dim_); }

  /// Lower-triangular factor L of the base Gaussian covariance L L^T.
  [[nodiscard]] Eigen::MatrixXd scale_factor() const {
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(dim_, dim_);
    if (kind_ == CovarianceKind::diagonal) {
      l.diagonal() = flat_.tail(dim_).array().exp().matrix();
      return l;
    }
    for (Eigen::Index i = 0; i < dim_; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        l(i, j) = flat_[tri_index(dim_, i, j)];
      }
      l(i, i) = std::exp(flat_[tri_index(dim_, i, i)]);
    }
    return l;
  }

  [[nodiscard]] Eigen::VectorXd log_scale_diagonal() const {
    if (kind_ == CovarianceKind::diagonal) {
      return flat_.tail(dim_);
    }
    Eigen::VectorXd out(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      out[i] = flat_[tri_index(dim_, i, i)];
    }
    return out;
  }

  /// Covariance of the untransformed Gaussian.
  [[nodiscard]] Eigen::MatrixXd base_covariance() const {
    const Eigen::MatrixXd l = scale_factor();
    return l * l.transpose();
  }

  static Eigen::Index tri_index(Eigen::Index dim, Eigen::Index i, Eigen::Index j) noexcept {
    return dim + i * (i + 1) / 2 + j;
  }

 private:
  VariationalParams(Eigen::Index dim, CovarianceKind kind, Transform transform, Eigen::VectorXd flat)
      : dim_(dim), kind_(kind), transform_(std::move(transform)), flat_(std::move(flat)) {
    if (transform_.kind() == TransformKind::tanh_box && transform_.center().size() != dim_) {
      throw std::invalid_argument("tanh_box transform dimension does not match the family");
    }
  }

  Eigen::Index dim_;
  CovarianceKind kind_;
  Transform transform_;
  Eigen::VectorXd flat_;
};

namespace detail {

// Unpacked view of the base Gaussian used by the batch kernels.
struct BaseGaussian {
  explicit BaseGaussian(const VariationalParams& params)
      : kind(params.covariance_kind()),
        mean(params.mean()),
        log_diag(params.log_scale_diagonal()),
        log_det(log_diag.sum()) {
    if (kind == CovarianceKind::diagonal) {
      std_dev = log_diag.array().exp().matrix();
    } else {
      lower = params.scale_factor();
    }
  }

  // u = L^{-1} (x - mean)
  [[nodiscard]] Eigen::VectorXd whiten(const Eigen::VectorXd& x) const {
    if (kind == CovarianceKind::diagonal) {
      return ((x - mean).array() / std_dev.array()).matrix();
    }
    return lower.triangularView<Eigen::Lower>().solve(x - mean);
  }

  [[nodiscard]] Eigen::VectorXd colour(const Eigen::VectorXd& xi) const {
    if (kind == CovarianceKind::diagonal) {
      return mean + (std_dev.array() * xi.array()).matrix();
    }
    return mean + lower.triangularView<Eigen::Lower>() * xi;
  }

  CovarianceKind kind;
  Eigen::VectorXd mean;
  Eigen::VectorXd log_diag;
  double log_det;
  Eigen::VectorXd std_dev;
  Eigen::MatrixXd lower;
};

inline std::optional<Eigen::VectorXd> preimage(const Transform& t, const Eigen::VectorXd& z) {
  Eigen::VectorXd x(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    auto xi = t.inverse(i, z[i]);
    if (!xi) {
      return std::nullopt;
    }
    x[i] = *xi;
  }
  return x;
}

inline double log_density(const BaseGaussian& g, const Transform& t, const Eigen::VectorXd& z) {
  if (z.size() != g.mean.size()) {
    throw std::invalid_argument("log_density: dimension mismatch");
  }
  const auto x = preimage(t, z);
  if (!x) {
    return kNegInf;
  }
  const Eigen::VectorXd u = g.whiten(*x);
  double log_jac = 0.0;
  for (Eigen::Index i = 0; i < x->size(); ++i) {
    log_jac += t.log_abs_derivative(i, (*x)[i]);
  }
  const auto d = static_cast<double>(z.size());
  return -d * kLogSqrt2Pi - g.log_det - 0.5 * u.squaredNorm() - log_jac;
}

}  // namespace detail

/// Draws n samples, one per row; each row is transform(mean + L xi).
inline Eigen::MatrixXd sample(const VariationalParams& params, Eigen::Index n, Rng& rng) {
  if (n < 1) {
    throw std::invalid_argument("sample: n must be positive");
  }
  const detail::BaseGaussian g(params);
  const auto& t = params.transform();
  const Eigen::Index d = params.dim();
  Eigen::MatrixXd out(n, d);
  Eigen::VectorXd xi(d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index i = 0; i < d; ++i) {
      xi[i] = rng.normal();
    }
    const Eigen::VectorXd x = g.colour(xi);
    for (Eigen::Index i = 0; i < d; ++i) {
      out(r, i) = t.forward(i, x[i]);
    }
  }
  return out;
}

/// log q(z) including the inverse Jacobian of the output transform; -inf outside the support.
inline double log_density(const VariationalParams& params, const Eigen::VectorXd& z) {
  return detail::log_density(detail::BaseGaussian(params), params.transform(), z);
}

/// log q for every row of `samples`.
inline Eigen::VectorXd log_density_rows(const VariationalParams& params, const Eigen::MatrixXd& samples) {
  const detail::BaseGaussian g(params);
  Eigen::VectorXd out(samples.rows());
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    out[r] = detail::log_density(g, params.transform(), samples.row(r).transpose());
  }
  return out;
}

namespace detail {

inline Eigen::VectorXd score_gradient(const BaseGaussian& g, const VariationalParams& params,
                                      const Eigen::VectorXd& z) {
  const auto x = preimage(params.transform(), z);
  if (!x) {
    throw OutOfSupportError("score_gradient: point outside the family support");
  }
  const Eigen::Index d = params.dim();
  const Eigen::VectorXd u = g.whiten(*x);
  Eigen::VectorXd grad(params.num_params());
  if (g.kind == CovarianceKind::diagonal) {
    grad.head(d) = (u.array() / g.std_dev.array()).matrix();
    grad.tail(d) = (u.array().square() - 1.0).matrix();
    return grad;
  }
  // d/dL of -0.5|L^{-1} r|^2 - log det L is tril(L^{-T} u u^T) - diag(1/L_ii).
  const Eigen::VectorXd a = g.lower.transpose().triangularView<Eigen::Upper>().solve(u);
  grad.head(d) = a;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      grad[VariationalParams::tri_index(d, i, j)] = a[i] * u[j];
    }
    grad[VariationalParams::tri_index(d, i, i)] = a[i] * u[i] * g.lower(i, i) - 1.0;
  }
  return grad;
}

}  // namespace detail

/// Gradient of log q(z) with respect to the flat parameter vector.
inline Eigen::VectorXd score_gradient(const VariationalParams& params, const Eigen::VectorXd& z) {
  return detail::score_gradient(detail::BaseGaussian(params), params, z);
}

/// Reparameterized draw together with its parameter Jacobian.
struct PathwiseSample {
  Eigen::VectorXd z;
  Eigen::VectorXd base;      ///< mean + L xi, before the output transform
  Eigen::MatrixXd jacobian;  ///< dz / dphi, D x num_params
};

inline PathwiseSample pathwise_sample(const VariationalParams& params, const Eigen::VectorXd& xi) {
  const auto& t = params.transform();
  if (t.kind() == TransformKind::tanh_box) {
    throw UnsupportedFamilyError("pathwise_sample: tanh-box families are not supported");
  }
  const Eigen::Index d = params.dim();
  if (xi.size() != d) {
    throw std::invalid_argument("pathwise_sample: noise dimension mismatch");
  }
  const detail::BaseGaussian g(params);
  PathwiseSample out;
  out.base = g.colour(xi);
  out.z.resize(d);
  out.jacobian = Eigen::MatrixXd::Zero(d, params.num_params());
  for (Eigen::Index i = 0; i < d; ++i) {
    const double fx = t.derivative(i, out.base[i]);
    out.z[i] = t.forward(i, out.base[i]);
    out.jacobian(i, i) = fx;
    if (g.kind == CovarianceKind::diagonal) {
      out.jacobian(i, d + i) = fx * g.std_dev[i] * xi[i];
      continue;
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      out.jacobian(i, VariationalParams::tri_index(d, i, j)) = fx * xi[j];
    }
    out.jacobian(i, VariationalParams::tri_index(d, i, i)) = fx * g.lower(i, i) * xi[i];
  }
  return out;
}

}  // namespace visa

#endif  // VISA_FAMILY_HPP
