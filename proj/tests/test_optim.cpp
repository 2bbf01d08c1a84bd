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
#include <limits>

#include <gtest/gtest.h>

#include "visa/error.hpp"
#include "visa/optim.hpp"

namespace visa {
namespace {

OptimizerState sgd(double lr) { return make_optimizer(OptimizerSpec{OptimizerKind::sgd, lr}); }
OptimizerState adam(double lr) { return make_optimizer(OptimizerSpec{OptimizerKind::adam, lr}); }

TEST(Sgd, SingleStepArithmetic) {
  const auto [theta, state] = step(sgd(0.1), Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(theta[0], 0.8);
  EXPECT_EQ(state.timestep, 1);
}

TEST(Sgd, QuadraticConvergesGeometrically) {
  OptimizerState s = sgd(0.5);
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 1.0);
  for (int k = 0; k < 100; ++k) {
    auto [next, ns] = step(s, theta, theta);
    theta = next;
    s = ns;
  }
  EXPECT_LT(std::abs(theta[0]), 1e-10);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradient) {
  const double lr = 0.01;
  Eigen::VectorXd g(4);
  g << 3.0, -0.2, 1e-3, -50.0;
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  const auto [next, state] = step(adam(lr), theta, g);
  for (Eigen::Index i = 0; i < 4; ++i) {
    // At t = 1 both bias corrections cancel: the update is lr * g / (|g| + eps).
    const double expected = lr * std::abs(g[i]) / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(std::abs(next[i]), expected, 1e-15);
    EXPECT_EQ(std::signbit(next[i]), !std::signbit(g[i]));
  }
}

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
  const Eigen::VectorXd theta = Eigen::Vector2d(0.5, -1.0);
  auto [p1, s1] = step(adam(0.1), theta, Eigen::Vector2d(1.0, -2.0));
  const auto [p2, s2] = step(s1, p1, Eigen::VectorXd::Zero(2));
  EXPECT_TRUE(s2.first_moment.isApprox(0.9 * s1.first_moment));
  EXPECT_TRUE(s2.second_moment.isApprox(0.999 * s1.second_moment));
  // The update is driven by the decayed first moment, not by the zero gradient itself.
  const auto [p_zero, s_zero] = step(adam(0.1), theta, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(p_zero, theta);
  EXPECT_EQ(s_zero.first_moment, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(s_zero.second_moment, Eigen::VectorXd::Zero(2));
}

TEST(Optimizer, StepIsPure) {
  for (auto s0 : {sgd(0.05), adam(0.05)}) {
    auto [p1, s1] = step(s0, Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0.1, -0.4, 2.0));
    const auto a = step(s1, p1, Eigen::Vector3d(-1, 0.5, 0.0));
    const auto b = step(s1, p1, Eigen::Vector3d(-1, 0.5, 0.0));
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second.first_moment, b.second.first_moment);
    EXPECT_EQ(a.second.second_moment, b.second.second_moment);
    EXPECT_EQ(a.second.timestep, b.second.timestep);
  }
}

TEST(Adam, TimestepIncrementsAndMomentsStayFinite) {
  OptimizerState s = adam(1e-3);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  for (int k = 1; k <= 500; ++k) {
    const Eigen::Vector3d g(std::sin(k), 1e6 * std::cos(k), 1e-9);
    auto [next, ns] = step(s, theta, g);
    EXPECT_EQ(ns.timestep, s.timestep + 1);
    ASSERT_TRUE(ns.first_moment.allFinite());
    ASSERT_TRUE(ns.second_moment.allFinite());
    theta = next;
    s = ns;
  }
}

TEST(Optimizer, NonFiniteGradientIsAnError) {
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  const Eigen::Vector2d bad(1.0, std::numeric_limits<double>::quiet_NaN());
  const Eigen::Vector2d inf(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_THROW(step(adam(0.1), theta, bad), NonFiniteGradientError);
  EXPECT_THROW(step(sgd(0.1), theta, inf), NonFiniteGradientError);
}

TEST(Optimizer, SizeMismatchRejected) {
  EXPECT_THROW(step(sgd(0.1), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

}  // namespace
}  // namespace visa
