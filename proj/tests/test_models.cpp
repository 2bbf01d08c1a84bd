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
#include <memory>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "visa/error.hpp"
#include "visa/models/gaussian.hpp"
#include "visa/models/lgssm.hpp"
#include "visa/models/lotka_volterra.hpp"
#include "visa/models/particle_filter.hpp"
#include "visa/models/pickover.hpp"

namespace visa {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274;

// ---- Gaussian targets ----

TEST(DiagCov, EndpointsForced) {
  const Eigen::VectorXd v = make_diag_cov(2, 0.1, 1.0);
  EXPECT_DOUBLE_EQ(v[0], 0.1);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
}

TEST(DiagCov, LinearSpacingAtDefaultDimension) {
  const Eigen::VectorXd v = make_diag_cov(128, 0.1, 1.0);
  EXPECT_DOUBLE_EQ(v[0], 0.1);
  EXPECT_NEAR(v[127], 1.0, 1e-15);
  for (Eigen::Index i = 1; i < 128; ++i) {
    EXPECT_NEAR(v[i] - v[i - 1], 0.9 / 127.0, 1e-15);
  }
}

TEST(DiagCov, EqualBoundsGiveScaledIdentity) {
  EXPECT_EQ(make_diag_cov(5, 0.3, 0.3), Eigen::VectorXd::Constant(5, 0.3));
}

TEST(DenseCov, SymmetricWithEigenvaluesAboveFloor) {
  Rng rng(60);
  const Eigen::MatrixXd c = make_dense_cov(16, rng);
  EXPECT_EQ(c, c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.1 - 1e-12);
  EXPECT_NEAR((c - 0.1 * Eigen::MatrixXd::Identity(16, 16)).norm(), 1.0, 1e-12);
}

TEST(DenseCov, PositiveDefiniteAtDimension32AcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd c = make_dense_cov(32, rng);
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(c).info(), Eigen::Success) << "seed " << seed;
    EXPECT_NEAR((c - 0.1 * Eigen::MatrixXd::Identity(32, 32)).norm(), 1.0, 1e-12);
  }
}

TEST(GaussianTarget, LogDensityMatchesDenseSolve) {
  Rng rng(61);
  for (Eigen::Index d = 1; d <= 8; ++d) {
    const Eigen::MatrixXd cov = d == 1 ? Eigen::MatrixXd::Constant(1, 1, 0.7) : make_dense_cov(d, rng);
    const Eigen::VectorXd mu = testing::random_vector(d, rng);
    const GaussianTarget t(mu, cov);
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXd z = testing::random_vector(d, rng, 2.0);
      const Eigen::VectorXd r = z - mu;
      const double expected = -0.5 * r.dot(cov.fullPivLu().solve(r)) -
                              0.5 * std::log((2.0 * std::numbers::pi * cov).fullPivLu().determinant());
      EXPECT_NEAR(t.log_density(z), expected, 1e-10);
    }
  }
}

TEST(GaussianTarget, DensityIntegratesToOne) {
  const GaussianTarget t(Eigen::VectorXd::Constant(1, 0.4), Eigen::MatrixXd::Constant(1, 1, 0.3));
  const int n = 100001;
  const double lo = -6.0, hi = 6.0, h = (hi - lo) / (n - 1);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
    total += w * std::exp(t.log_density(Eigen::VectorXd::Constant(1, lo + k * h))) * h;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(GaussianTarget, GradientMatchesFiniteDifferences) {
  Rng rng(62);
  const GaussianTarget t(testing::random_vector(5, rng), make_dense_cov(5, rng));
  const Eigen::VectorXd z = testing::random_vector(5, rng);
  const auto fd = testing::finite_difference([&](const Eigen::VectorXd& x) { return t.log_density(x); }, z);
  EXPECT_LE(testing::relative_error(t.gradient(z), fd), 1e-6);
}

TEST(GaussianTarget, RejectsNonPositiveDefinite) {
  Eigen::Matrix2d c;
  c << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianTarget(Eigen::Vector2d::Zero(), c), std::invalid_argument);
}

// ---- Lotka-Volterra ----

TEST(LvRhs, EquilibriumIsFixedPoint) {
  const LvParams p{1.2, 0.04, 0.8, 0.06};
  const auto d = lv_rhs(p.gamma / p.delta, p.alpha / p.beta, p);
  EXPECT_NEAR(d[0], 0.0, 1e-14);
  EXPECT_NEAR(d[1], 0.0, 1e-14);
}

TEST(LvRhs, PreyAxisIsInvariant) { EXPECT_EQ(lv_rhs(0.0, 7.0, LvParams{})[0], 0.0); }

TEST(LvRhs, DirectArithmetic) {
  const auto d = lv_rhs(10.0, 10.0, LvParams{1.0, 0.05, 1.0, 0.05});
  EXPECT_DOUBLE_EQ(d[0], 5.0);
  EXPECT_DOUBLE_EQ(d[1], -5.0);
}

using State1 = std::array<double, 1>;

double rk4_exp_error(double h) {
  const auto out = rk4_integrate([](const State1& s) { return s; }, State1{1.0}, h, 1);
  return std::abs(out[0][0] - std::numbers::e);
}

TEST(Rk4, ExponentialGrowthAtUnitTime) { EXPECT_LT(rk4_exp_error(0.01), 1e-8); }

TEST(Rk4, FourthOrderConvergence) {
  const double ratio = rk4_exp_error(0.02) / rk4_exp_error(0.01);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Rk4, OutputsAtIntegerTimes) {
  const auto out = rk4_integrate([](const State1& s) { return s; }, State1{1.0}, 0.01, 3);
  ASSERT_EQ(out.size(), 3u);
  for (int t = 1; t <= 3; ++t) {
    EXPECT_NEAR(out[static_cast<std::size_t>(t - 1)][0], std::exp(t), 1e-7 * std::exp(t));
  }
}

TEST(Rk4, FirstIntegralConserved) {
  const LvParams p{1.0, 0.05, 1.0, 0.05};
  const State2 z0{10.0, 5.0};
  const double v0 = lv_first_integral(z0[0], z0[1], p);
  for (const auto& z : lv_trajectory(z0, p, 0.01, 20)) {
    EXPECT_LT(std::abs(lv_first_integral(z[0], z[1], p) - v0) / std::abs(v0), 1e-5);
  }
}

TEST(Rk4, BlowUpRaisesIntegrationError) {
  EXPECT_THROW(rk4_integrate([](const State1& s) { return State1{s[0] * s[0]}; }, State1{10.0}, 0.01, 5),
               IntegrationError);
}

TEST(Rk4, RejectsStepThatMissesIntegerTimes) {
  EXPECT_THROW(rk4_integrate([](const State1& s) { return s; }, State1{1.0}, 0.03, 1), std::invalid_argument);
}

Eigen::VectorXd lv_point(double u0, double v0, const LvParams& p) {
  Eigen::VectorXd z(6);
  z << u0, v0, p.alpha, p.beta, p.gamma, p.delta;
  return z;
}

TEST(LvLogJoint, PriorAtCentersIsSumOfStatedDensities) {
  const LotkaVolterraModel empty{LvData{Eigen::MatrixXd(0, 2)}};
  // LogNormal(log 10, 1) at its median 10, Normal(1, 0.5) at 1, Normal(0.05, 0.05) at 0.05.
  const double lognormal = -kHalfLog2Pi - std::log(10.0);
  const double normal_alpha = -kHalfLog2Pi - std::log(0.5);
  const double normal_beta = -kHalfLog2Pi - std::log(0.05);
  const double expected = 2.0 * lognormal + 2.0 * normal_alpha + 2.0 * normal_beta;
  EXPECT_NEAR(lv_log_joint(empty, lv_point(10, 10, LvParams{})), expected, 1e-12);
}

TEST(LvLogJoint, NoiseFreeDataGivesModeValues) {
  const LvParams p{0.9, 0.04, 1.1, 0.06};
  const State2 z0{12.0, 8.0};
  Rng rng(63);
  const LvData data = lv_simulate_data(p, z0, 0.0, 15, rng);
  const LotkaVolterraModel model{data, 0.25, 0.01};
  const LotkaVolterraModel empty{LvData{Eigen::MatrixXd(0, 2)}, 0.25, 0.01};
  double expected = 0.0;
  for (Eigen::Index t = 0; t < 15; ++t) {
    for (Eigen::Index s = 0; s < 2; ++s) {
      expected += -kHalfLog2Pi - std::log(0.25) - std::log(data.y(t, s));
    }
  }
  const Eigen::VectorXd z = lv_point(z0[0], z0[1], p);
  EXPECT_NEAR(lv_log_joint(model, z) - lv_log_joint(empty, z), expected, 1e-9);
}

TEST(LvLogJoint, NonPositiveInitialStateIsOutOfSupport) {
  const LotkaVolterraModel model{LvData{Eigen::MatrixXd::Ones(3, 2)}};
  EXPECT_EQ(lv_log_joint(model, lv_point(-1.0, 10.0, LvParams{})), kNegInf);
  EXPECT_EQ(lv_log_joint(model, lv_point(10.0, 0.0, LvParams{})), kNegInf);
}

TEST(LvLogJoint, BlowUpIsOutOfSupport) {
  const LotkaVolterraModel model{LvData{Eigen::MatrixXd::Ones(20, 2)}};
  // Strongly negative interaction rates make both populations explode.
  EXPECT_EQ(lv_log_joint(model, lv_point(10.0, 10.0, LvParams{1.0, -5.0, 1.0, 5.0})), kNegInf);
}

TEST(LvLogJoint, DeterministicAndCountedOncePerCall) {
  Rng rng(64);
  const auto data = lv_simulate_data(LvParams{}, State2{10, 10}, 0.25, 20, rng);
  const Model m = make_lv_model(std::make_shared<const LotkaVolterraModel>(LotkaVolterraModel{data}));
  const Eigen::VectorXd z = lv_point(9.0, 11.0, LvParams{1.1, 0.05, 0.9, 0.05});
  Rng a(1);
  Rng b(2);
  EXPECT_EQ(m.log_joint(z, a), m.log_joint(z, b));
  EXPECT_EQ(m.eval_count(), 2u);
}

TEST(LvSimulate, ZeroNoiseReproducesTrajectory) {
  Rng rng(65);
  const LvParams p{};
  const auto data = lv_simulate_data(p, State2{10, 10}, 0.0, 20, rng);
  const auto traj = lv_trajectory(State2{10, 10}, p, 0.01, 20);
  for (int t = 0; t < 20; ++t) {
    EXPECT_EQ(data.y(t, 0), traj[static_cast<std::size_t>(t)][0]);
    EXPECT_EQ(data.y(t, 1), traj[static_cast<std::size_t>(t)][1]);
  }
}

TEST(LvSimulate, LogResidualSpreadMatchesNoiseScale) {
  Rng rng(66);
  const LvParams p{};
  const auto data = lv_simulate_data(p, State2{10, 10}, 0.25, 200, rng);
  const auto traj = lv_trajectory(State2{10, 10}, p, 0.01, 200);
  std::vector<double> r;
  for (int t = 0; t < 200; ++t) {
    for (int s = 0; s < 2; ++s) {
      r.push_back(std::log(data.y(t, s) / traj[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]));
    }
  }
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double x : r) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(r.size() - 1));
  EXPECT_NEAR(sd, 0.25, 0.15 * 0.25);
}

TEST(LvSimulate, DefaultConfigOscillates) {
  Rng rng(67);
  const auto data = lv_simulate_data(LvParams{}, State2{10, 10}, 0.25, 20, rng);
  for (int s = 0; s < 2; ++s) {
    bool up = false, down = false;
    for (int t = 1; t < 20; ++t) {
      up |= data.y(t, s) > data.y(t - 1, s);
      down |= data.y(t, s) < data.y(t - 1, s);
    }
    EXPECT_TRUE(up && down) << "species " << s;
  }
}

// ---- Pickover ----

TEST(PickoverStep, OriginMapsToFixedImage) {
  for (double beta : {-2.3, 0.7, 3.0}) {
    const auto x = pickover_step({0.0, 0.0, 0.0}, beta, 1.9);
    EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(x[1], -1.0);
    EXPECT_EQ(x[2], 0.0);
  }
}

TEST(PickoverStep, ScalarEvaluation) {
  const auto x = pickover_step({1.0, 1.0, 1.0}, -2.3, 1.25);
  EXPECT_DOUBLE_EQ(x[0], std::sin(-2.3) - std::cos(2.5));
  EXPECT_DOUBLE_EQ(x[1], std::sin(1.5) - std::cos(1.25));
  EXPECT_DOUBLE_EQ(x[2], std::sin(1.0));
}

TEST(PickoverStep, ThirdComponentBounded) {
  Rng rng(68);
  for (int k = 0; k < 1000; ++k) {
    const State3 x{5 * rng.normal(), 5 * rng.normal(), 5 * rng.normal()};
    EXPECT_LE(std::abs(pickover_step(x, 6 * rng.uniform() - 3, 3 * rng.uniform())[2]), 1.0);
  }
}

class PickoverFixture : public ::testing::Test {
 protected:
  static std::shared_ptr<const PickoverModel> data() {
    static const auto model = [] {
      Rng rng(69);
      auto m = std::make_shared<PickoverModel>();
      m->y = pickover_simulate(-2.3, 1.25, 100, m->sigma_z, m->sigma_y, rng);
      return std::shared_ptr<const PickoverModel>(m);
    }();
    return model;
  }
};

TEST_F(PickoverFixture, OutsidePriorBoxIsOutOfSupport) {
  Rng rng(0);
  EXPECT_EQ(pickover_log_joint(*data(), Eigen::Vector2d(4.0, 1.0), rng), kNegInf);
  EXPECT_EQ(pickover_log_joint(*data(), Eigen::Vector2d(0.0, -0.1), rng), kNegInf);
}

TEST_F(PickoverFixture, PriorTermIsLogOneOverEighteen) {
  for (double beta : {-2.9, 0.0, 1.7}) {
    for (double eta : {0.1, 2.5}) {
      EXPECT_EQ(PickoverModel::log_prior(beta, eta), -std::log(18.0));
    }
  }
  // With no observations the filter contributes nothing.
  PickoverModel none;
  none.y = Eigen::MatrixXd(0, 3);
  Rng rng(1);
  EXPECT_EQ(pickover_log_joint(none, Eigen::Vector2d(1.0, 1.0), rng), -std::log(18.0));
}

TEST_F(PickoverFixture, TruthScoresAboveMirroredParameters) {
  const Model m = make_pickover_model(data());
  Rng rng(70);
  double truth = 0.0, mirrored = 0.0;
  for (int k = 0; k < 20; ++k) {
    truth += m.log_joint(Eigen::Vector2d(-2.3, 1.25), rng);
    mirrored += m.log_joint(Eigen::Vector2d(2.3, 1.25), rng);
  }
  EXPECT_GT(truth / 20.0, mirrored / 20.0);
  EXPECT_EQ(m.eval_count(), 40u);
}

TEST_F(PickoverFixture, PseudoMarginalIsStochasticButSeeded) {
  const Eigen::Vector2d theta(-2.0, 1.0);
  Rng rng(71);
  const double a = pickover_log_joint(*data(), theta, rng);
  const double b = pickover_log_joint(*data(), theta, rng);
  EXPECT_NE(a, b);
  Rng again(71);
  EXPECT_EQ(pickover_log_joint(*data(), theta, again), a);
}

TEST(PickoverTransform, ImageIsThePriorBox) {
  const Transform t = pickover_transform();
  EXPECT_NEAR(t.forward(0, 50.0), 3.0, 1e-12);
  EXPECT_NEAR(t.forward(0, -50.0), -3.0, 1e-12);
  EXPECT_NEAR(t.forward(1, 50.0), 3.0, 1e-12);
  EXPECT_NEAR(t.forward(1, -50.0), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(t.forward(1, 0.0), 1.5);
}

// ---- Particle filter and Kalman oracle ----

LgssmModel lgssm_with(std::vector<double> y) {
  LgssmModel m;
  m.y = std::move(y);
  return m;
}

double log_normal_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

TEST(Kalman, OneStepMarginal) {
  LgssmModel m = lgssm_with({0.7});
  m.m0 = 0.0;
  m.p0 = 1.0;
  m.c = 1.0;
  m.r = 1.0;
  EXPECT_NEAR(kalman_loglik(m), log_normal_pdf(0.7, 0.0, 2.0), 1e-14);
}

TEST(Kalman, ChainRuleAdditivity) {
  const LgssmModel m2 = lgssm_with({0.3, -1.2});
  const LgssmModel m1 = lgssm_with({0.3});
  // Predictive of y2 given y1, by hand.
  const double s1 = m1.c * m1.c * m1.p0 + m1.r;
  const double gain = m1.p0 * m1.c / s1;
  const double mean1 = m1.m0 + gain * (0.3 - m1.c * m1.m0);
  const double var1 = m1.p0 * (1.0 - gain * m1.c);
  const double pred_var = m1.c * m1.c * (m1.a * m1.a * var1 + m1.q) + m1.r;
  EXPECT_NEAR(kalman_loglik(m2) - kalman_loglik(m1), log_normal_pdf(-1.2, m1.c * m1.a * mean1, pred_var), 1e-13);
}

TEST(Kalman, MatchesDenseGaussianMarginalization) {
  LgssmModel m = lgssm_with({0.4, 1.1});
  m.a = 0.7;
  m.q = 0.3;
  m.c = 1.3;
  m.r = 0.6;
  m.m0 = 0.2;
  m.p0 = 1.5;
  // x0 ~ N(m0, p0), x1 = a x0 + w, y_t = c x_t + v_t.
  const double var_x0 = m.p0;
  const double var_x1 = m.a * m.a * m.p0 + m.q;
  const double cov01 = m.a * m.p0;
  Eigen::Matrix2d s;
  s << m.c * m.c * var_x0 + m.r, m.c * m.c * cov01, m.c * m.c * cov01, m.c * m.c * var_x1 + m.r;
  const Eigen::Vector2d mu(m.c * m.m0, m.c * m.a * m.m0);
  const Eigen::Vector2d r = Eigen::Vector2d(0.4, 1.1) - mu;
  const double expected = -0.5 * r.dot(s.inverse() * r) - 0.5 * std::log((2.0 * std::numbers::pi * s).determinant());
  EXPECT_NEAR(kalman_loglik(m), expected, 1e-10);
}

TEST(BootstrapPf, UnbiasedOnLinearGaussianModel) {
  Rng data_rng(72);
  LgssmModel m;
  m.y = lgssm_simulate(m, 5, data_rng);
  const double exact = kalman_loglik(m);
  for (auto scheme : {Resampling::multinomial, Resampling::systematic}) {
    Rng rng(73);
    const int reps = 5000;
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < reps; ++k) {
      const double ratio = std::exp(bootstrap_pf(m, 100, rng, scheme) - exact);
      sum += ratio;
      sum_sq += ratio * ratio;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq / reps - mean * mean) / (reps - 1));
    EXPECT_NEAR(mean, 1.0, 4.0 * se) << to_string(scheme);
  }
}

TEST(BootstrapPf, FlatLikelihoodLimitHasNoVariance) {
  LgssmModel m = lgssm_with({0.5});
  m.r = 1e12;
  Rng a(74);
  Rng b(75);
  const double ea = bootstrap_pf(m, 50, a);
  const double eb = bootstrap_pf(m, 50, b);
  EXPECT_NEAR(ea, eb, 1e-10);
  EXPECT_NEAR(ea, -0.5 * std::log(2.0 * std::numbers::pi * 1e12), 1e-10);
  EXPECT_NEAR(ea, kalman_loglik(m), 1e-10);
}

TEST(BootstrapPf, SameSeedSameEstimate) {
  Rng data_rng(76);
  LgssmModel m;
  m.y = lgssm_simulate(m, 10, data_rng);
  Rng a(77);
  Rng b(77);
  EXPECT_EQ(bootstrap_pf(m, 64, a), bootstrap_pf(m, 64, b));
}

struct ImpossibleObservations {
  using State = double;
  [[nodiscard]] int horizon() const { return 3; }
  [[nodiscard]] double sample_initial(Rng& rng) const { return rng.normal(); }
  [[nodiscard]] double sample_transition(double x, Rng&) const { return x; }
  [[nodiscard]] double log_observation(double, int t) const { return t == 1 ? kNegInf : 0.0; }
};

TEST(BootstrapPf, AllZeroWeightsGiveNegInf) {
  Rng rng(78);
  EXPECT_EQ(bootstrap_pf(ImpossibleObservations{}, 10, rng), kNegInf);
}

TEST(BootstrapPf, RejectsSingleParticle) {
  Rng rng(79);
  EXPECT_THROW(bootstrap_pf(lgssm_with({0.0}), 1, rng), std::invalid_argument);
}

}  // namespace
}  // namespace visa
