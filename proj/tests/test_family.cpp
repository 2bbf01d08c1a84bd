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

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/rng.hpp"

namespace visa {
namespace {

using testing::finite_difference;
using testing::random_params;
using testing::relative_error;

std::vector<Transform> transforms_for(Eigen::Index d) {
  return {Transform::identity(), Transform::exp(),
          Transform::tanh_box(Eigen::VectorXd::Constant(d, 0.5), Eigen::VectorXd::Constant(d, 2.0))};
}

// A point in the support of `t`, away from its boundary.
Eigen::VectorXd point_in_support(const Transform& t, Eigen::Index d, Rng& rng) {
  Eigen::VectorXd x = testing::random_vector(d, rng, 0.7);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    z[i] = t.forward(i, x[i]);
  }
  return z;
}

TEST(Rng, SameSeedSameDraws) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, SubstreamsAreDistinctAndReproducible) {
  const Rng root(7);
  Rng s1 = root.substream(1);
  Rng s1_again = root.substream(1);
  Rng s2 = root.substream(2);
  const auto x = s1.next_u64();
  EXPECT_EQ(x, s1_again.next_u64());
  EXPECT_NE(x, s2.next_u64());
}

TEST(Transform, ForwardInverseRoundTrip) {
  Rng rng(1);
  for (const auto& t : transforms_for(3)) {
    for (int k = 0; k < 50; ++k) {
      const double x = 2.0 * rng.normal();
      const auto back = t.inverse(1, t.forward(1, x));
      ASSERT_TRUE(back.has_value());
      EXPECT_NEAR(*back, x, 1e-8 * (1.0 + std::abs(x)));
    }
  }
}

TEST(Transform, LogAbsDerivativeMatchesFiniteDifference) {
  Rng rng(2);
  for (const auto& t : transforms_for(2)) {
    for (int k = 0; k < 20; ++k) {
      const double x = rng.normal();
      const double h = 1e-6;
      const double fd = (t.forward(0, x + h) - t.forward(0, x - h)) / (2 * h);
      EXPECT_NEAR(std::exp(t.log_abs_derivative(0, x)), fd, 1e-6 * std::max(1.0, fd));
      EXPECT_NEAR(t.derivative(0, x), fd, 1e-6 * std::max(1.0, fd));
      const double slope_fd = (t.log_abs_derivative(0, x + h) - t.log_abs_derivative(0, x - h)) / (2 * h);
      EXPECT_NEAR(t.log_abs_derivative_slope(x), slope_fd, 1e-6);
    }
  }
}

TEST(Sample, NearZeroScaleCollapsesToMean) {
  Eigen::VectorXd mean(3);
  mean << 0.5, -1.0, 2.0;
  const auto p = VariationalParams::diagonal(mean, Eigen::VectorXd::Constant(3, -20.0));
  Rng rng(3);
  const Eigen::MatrixXd z = sample(p, 100, rng);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    EXPECT_LT((z.row(r).transpose() - mean).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Sample, ExpTransformLogMeanMatchesLogNormal) {
  const Eigen::Index n = 100000;
  const auto p = VariationalParams::diagonal(Eigen::VectorXd::Constant(1, std::log(10.0)), Eigen::VectorXd::Zero(1),
                                             Transform::exp());
  Rng rng(4);
  const Eigen::MatrixXd z = sample(p, n, rng);
  EXPECT_GT(z.minCoeff(), 0.0);
  const double m = z.col(0).array().log().mean();
  EXPECT_NEAR(m, std::log(10.0), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Sample, SameSeedIdenticalMatrices) {
  Rng r(5);
  const auto p = random_params(4, CovarianceKind::full, Transform::identity(), r);
  Rng a(99);
  Rng b(99);
  EXPECT_EQ(sample(p, 20, a), sample(p, 20, b));
}

TEST(Sample, SupportInvariants) {
  Rng rng(6);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(2, 1.0);
  const Eigen::VectorXd hw = Eigen::VectorXd::Constant(2, 0.5);
  const auto boxed = random_params(2, CovarianceKind::full, Transform::tanh_box(c, hw), rng);
  const Eigen::MatrixXd zb = sample(boxed, 2000, rng);
  EXPECT_GT(zb.minCoeff(), 0.5);
  EXPECT_LT(zb.maxCoeff(), 1.5);
  const auto positive = random_params(3, CovarianceKind::diagonal, Transform::exp(), rng);
  EXPECT_GT(sample(positive, 2000, rng).minCoeff(), 0.0);
}

TEST(LogDensity, StandardNormalAtZero) {
  const auto p = VariationalParams::diagonal(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(log_density(p, Eigen::VectorXd::Zero(1)), -0.91893853320467274, 1e-12);
}

TEST(LogDensity, ExpTransformAtOnesHasNoJacobianTerm) {
  Rng rng(7);
  for (auto kind : {CovarianceKind::diagonal, CovarianceKind::full}) {
    const auto p = random_params(3, kind, Transform::exp(), rng);
    const auto base = p.with_flat(p.flat());
    const auto plain = VariationalParams::isotropic(Eigen::VectorXd::Zero(3), 0.0, kind).with_flat(p.flat());
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
    EXPECT_NEAR(log_density(base, ones), log_density(plain, Eigen::VectorXd::Zero(3)), 1e-12);
  }
}

TEST(LogDensity, IntegratesToOneByQuadrature) {
  Rng rng(8);
  for (const auto& t : transforms_for(1)) {
    const auto p = VariationalParams::diagonal(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, -0.4), t);
    // Trapezoid rule in the base coordinate, mapped through the transform.
    const int n = 200001;
    const double lo = 0.3 - 12.0 * std::exp(-0.4);
    const double hi = 0.3 + 12.0 * std::exp(-0.4);
    const double h = (hi - lo) / (n - 1);
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = lo + k * h;
      const double z = t.forward(0, x);
      const double dz = t.derivative(0, x);
      if (!(dz > 0.0)) {
        continue;
      }
      const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
      total += w * std::exp(log_density(p, Eigen::VectorXd::Constant(1, z))) * dz * h;
    }
    EXPECT_NEAR(total, 1.0, 1e-4);
  }
}

TEST(LogDensity, OutsideSupportIsNegInf) {
  Rng rng(9);
  const auto pe = random_params(2, CovarianceKind::full, Transform::exp(), rng);
  EXPECT_EQ(log_density(pe, Eigen::Vector2d(1.0, 0.0)), kNegInf);
  EXPECT_EQ(log_density(pe, Eigen::Vector2d(-1.0, 2.0)), kNegInf);
  const auto pb = random_params(2, CovarianceKind::diagonal,
                                Transform::tanh_box(Eigen::Vector2d(0.0, 1.5), Eigen::Vector2d(3.0, 1.5)), rng);
  EXPECT_EQ(log_density(pb, Eigen::Vector2d(3.5, 1.0)), kNegInf);
  EXPECT_EQ(log_density(pb, Eigen::Vector2d(0.0, 3.0)), kNegInf);
  EXPECT_TRUE(std::isfinite(log_density(pb, Eigen::Vector2d(2.9, 0.1))));
}

TEST(LogDensity, FullFamilyMatchesDenseGaussian) {
  Rng rng(10);
  const auto p = random_params(4, CovarianceKind::full, Transform::identity(), rng);
  const Eigen::MatrixXd l = p.scale_factor();
  const Eigen::MatrixXd cov = l * l.transpose();
  const Eigen::VectorXd z = testing::random_vector(4, rng);
  const Eigen::VectorXd r = z - p.mean();
  const double expected =
      -0.5 * r.dot(cov.inverse() * r) - 0.5 * std::log((2.0 * std::numbers::pi * cov).determinant());
  EXPECT_NEAR(log_density(p, z), expected, 1e-10);
}

TEST(ScoreGradient, ZeroAtMeanForMeanComponent) {
  const auto p = VariationalParams::diagonal(Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 0.2));
  EXPECT_DOUBLE_EQ(score_gradient(p, Eigen::VectorXd::Constant(1, 0.7))[0], 0.0);
}

// 100 random cases per family, relative error <= 1e-6.
TEST(ScoreGradient, MatchesFiniteDifferencesAcrossFamilies) {
  Rng rng(11);
  for (auto kind : {CovarianceKind::diagonal, CovarianceKind::full}) {
    for (const auto& t : transforms_for(3)) {
      for (int c = 0; c < 100; ++c) {
        const auto p = random_params(3, kind, t, rng);
        const Eigen::VectorXd z = point_in_support(t, 3, rng);
        const auto f = [&](const Eigen::VectorXd& flat) { return log_density(p.with_flat(flat), z); };
        const Eigen::VectorXd fd = finite_difference(f, p.flat(), 1e-5);
        EXPECT_LE(relative_error(score_gradient(p, z), fd), 1e-6) << "case " << c;
      }
    }
  }
}

TEST(ScoreGradient, ExpectationIsZero) {
  Rng rng(12);
  const auto p = random_params(2, CovarianceKind::full, Transform::exp(), rng);
  const Eigen::Index n = 100000;
  const Eigen::MatrixXd z = sample(p, n, rng);
  Eigen::MatrixXd g(n, p.num_params());
  for (Eigen::Index i = 0; i < n; ++i) {
    g.row(i) = score_gradient(p, z.row(i).transpose()).transpose();
  }
  const Eigen::VectorXd mean = g.colwise().mean();
  const Eigen::VectorXd sd = ((g.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt();
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    EXPECT_LE(std::abs(mean[k]), 4.0 * sd[k] / std::sqrt(static_cast<double>(n))) << "component " << k;
  }
}

TEST(ScoreGradient, OutsideSupportThrows) {
  const auto p = VariationalParams::diagonal(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Transform::exp());
  EXPECT_THROW(score_gradient(p, Eigen::VectorXd::Constant(1, -1.0)), OutOfSupportError);
}

TEST(Pathwise, ZeroNoiseGivesTransformedMean) {
  Rng rng(13);
  const auto p = random_params(3, CovarianceKind::full, Transform::exp(), rng);
  const auto ps = pathwise_sample(p, Eigen::VectorXd::Zero(3));
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(ps.z[i], std::exp(p.mean()[i]));
    EXPECT_DOUBLE_EQ(ps.jacobian(i, i), std::exp(p.mean()[i]));
  }
}

TEST(Pathwise, IdentityUnitScaleIsMeanPlusNoise) {
  Eigen::VectorXd mean(2);
  mean << 1.0, -2.0;
  const auto p = VariationalParams::full(mean, Eigen::Matrix2d::Identity());
  const Eigen::Vector2d xi(0.3, -0.8);
  EXPECT_EQ(pathwise_sample(p, xi).z, Eigen::VectorXd(mean + xi));
}

TEST(Pathwise, JacobianMatchesFiniteDifferences) {
  Rng rng(14);
  for (auto kind : {CovarianceKind::diagonal, CovarianceKind::full}) {
    for (const auto& t : {Transform::identity(), Transform::exp()}) {
      for (int c = 0; c < 20; ++c) {
        const auto p = random_params(3, kind, t, rng);
        const Eigen::VectorXd xi = testing::random_vector(3, rng);
        const auto ps = pathwise_sample(p, xi);
        for (Eigen::Index i = 0; i < 3; ++i) {
          const auto f = [&](const Eigen::VectorXd& flat) { return pathwise_sample(p.with_flat(flat), xi).z[i]; };
          EXPECT_LE(relative_error(ps.jacobian.row(i).transpose(), finite_difference(f, p.flat())), 1e-6);
        }
      }
    }
  }
}

TEST(Pathwise, TanhBoxIsUnsupported) {
  const auto p = VariationalParams::diagonal(
      Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2),
      Transform::tanh_box(Eigen::Vector2d(0.0, 1.5), Eigen::Vector2d(3.0, 1.5)));
  EXPECT_THROW(pathwise_sample(p, Eigen::VectorXd::Zero(2)), UnsupportedFamilyError);
}

TEST(Params, FullLayoutStoresLogDiagonal) {
  Eigen::Matrix2d l;
  l << 2.0, 0.0, 0.5, 3.0;
  const auto p = VariationalParams::full(Eigen::Vector2d(1.0, 2.0), l);
  ASSERT_EQ(p.num_params(), 5);
  EXPECT_DOUBLE_EQ(p.flat()[VariationalParams::tri_index(2, 0, 0)], std::log(2.0));
  EXPECT_DOUBLE_EQ(p.flat()[VariationalParams::tri_index(2, 1, 0)], 0.5);
  EXPECT_DOUBLE_EQ(p.flat()[VariationalParams::tri_index(2, 1, 1)], std::log(3.0));
  EXPECT_TRUE(p.scale_factor().isApprox(l));
}

TEST(Model, CountsEveryCallExactly) {
  const Model m(2, [](const Eigen::VectorXd& z, Rng&) { return -z.squaredNorm(); });
  for (int i = 0; i < 17; ++i) {
    m.log_joint(Eigen::Vector2d(1.0, 2.0));
  }
  EXPECT_EQ(m.eval_count(), 17u);
}

TEST(Model, CounterIsExactUnderConcurrency) {
  const Model m(1, [](const Eigen::VectorXd& z, Rng&) { return z[0]; });
  {
    std::vector<std::jthread> pool;
    for (int k = 0; k < 8; ++k) {
      pool.emplace_back([&m] {
        for (int i = 0; i < 1000; ++i) {
          m.log_joint(Eigen::VectorXd::Zero(1));
        }
      });
    }
  }
  EXPECT_EQ(m.eval_count(), 8000u);
}

TEST(Model, NonFiniteMapsToNegInf) {
  const Model m(1, [](const Eigen::VectorXd&, Rng&) { return std::nan(""); });
  EXPECT_EQ(m.log_joint(Eigen::VectorXd::Zero(1)), kNegInf);
}

TEST(Model, GradientRequiresAnalyticModel) {
  const Model m(1, [](const Eigen::VectorXd&, Rng&) { return 0.0; });
  Rng rng(0);
  EXPECT_FALSE(m.has_gradient());
  EXPECT_THROW(m.log_joint_and_gradient(Eigen::VectorXd::Zero(1), rng), UnsupportedModelError);
}

}  // namespace
}  // namespace visa
