#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "selfcare/errors.hpp"
#include "selfcare/kalman.hpp"

using namespace selfcare;
using namespace selfcare::fusion;

namespace {

KalmanConfig two_class() {
  KalmanConfig c;
  c.x0 = {0.8, 0.2};
  c.gamma = {1.0, 1.0};
  c.r_map = NoiseMap::Half;
  return c;
}

}  // namespace

// One predict and one update written out per class (everything is diagonal).
TEST(Kalman, SingleStepMatchesHandComputation) {
  KalmanFusion kf(two_class());
  kf.predict();
  ASSERT_TRUE(kf.update(std::vector<double>{0.9, 0.1}));

  const double x0[2] = {0.8, 0.2}, z[2] = {0.9, 0.1};
  const double p_prior = 0.01 + 5e-4;
  for (int c = 0; c < 2; ++c) {
    const double r = std::pow((1.0 - z[c]) / 2.0, 2);
    const double gain = p_prior / (p_prior + r);
    EXPECT_NEAR(kf.state()(c), x0[c] + gain * (z[c] - x0[c]), 1e-9);
    EXPECT_NEAR(kf.covariance()(c, c), (1.0 - gain) * p_prior, 1e-9);
  }
  EXPECT_NEAR(kf.covariance()(0, 1), 0.0, 1e-15);
  EXPECT_EQ(kf.decision(), 0);
}

TEST(Kalman, DoubleMapAndGammaScaling) {
  KalmanConfig c;
  c.x0 = {0.8, 0.1, 0.1};
  c.gamma = {0.278, 1.0, 1.0};
  c.epsilon = 0.4;
  c.r_map = NoiseMap::Double;
  KalmanFusion kf(c);
  kf.predict();
  const double z[3] = {0.2, 0.7, 0.1};
  ASSERT_TRUE(kf.update(std::vector<double>(z, z + 3)));
  for (int k = 0; k < 3; ++k) {
    const double zs = z[k] * c.gamma[static_cast<std::size_t>(k)];
    const double r = std::pow((1.0 - zs) * 2.0, 2);
    const double p = 0.0105;
    EXPECT_NEAR(kf.state()(k), c.x0[static_cast<std::size_t>(k)] + p / (p + r) * (zs - c.x0[static_cast<std::size_t>(k)]), 1e-12);
  }
}

TEST(Kalman, LargePriorFollowsMeasurement) {
  auto c = two_class();
  c.p0_scale = 1e6;
  c.r_map = NoiseMap::Constant;
  c.r_constant = 1e-9;
  KalmanFusion kf(c);
  kf.predict();
  kf.update(std::vector<double>{0.3, 0.7});
  EXPECT_NEAR(kf.state()(0), 0.3, 1e-3);
  EXPECT_NEAR(kf.state()(1), 0.7, 1e-3);
}

TEST(Kalman, MeasurementsBelowThresholdAreSkipped) {
  KalmanConfig c;
  c.x0 = {0.2, 0.5, 0.3};
  c.epsilon = 0.6;
  KalmanFusion kf(c);
  kf.predict();
  EXPECT_FALSE(kf.update(std::vector<double>{0.55, 0.4, 0.05}));
  EXPECT_FALSE(kf.update(std::vector<double>{0.3, 0.3, 0.4}));
  EXPECT_EQ(kf.decision(), 1);
  EXPECT_NEAR(kf.state()(1), 0.5, 0.0);
  EXPECT_NEAR(kf.covariance()(0, 0), 0.0105, 1e-15);
}

TEST(Kalman, OneHotMeasurementsTakeOverWithinThreeSteps) {
  for (int target = 0; target < 3; ++target) {
    KalmanConfig c;
    c.x0 = {0.93, 0.21, 0.01};
    c.r_map = NoiseMap::Half;
    KalmanFusion kf(c);
    std::vector<double> z(3, 0.0);
    z[static_cast<std::size_t>(target)] = 1.0;
    for (int step = 0; step < 3; ++step) {
      kf.predict();
      kf.update(z);
    }
    EXPECT_EQ(kf.decision(), target);
  }
}

TEST(Kalman, CovarianceStaysSymmetricAndPsd) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto map : {NoiseMap::Double, NoiseMap::Half, NoiseMap::Constant}) {
    KalmanConfig c;
    c.x0 = {0.8, 0.1, 0.1};
    c.gamma = {0.5 + u(rng), 0.5 + u(rng), 0.5 + u(rng)};
    c.epsilon = 0.2;
    c.r_map = map;
    KalmanFusion kf(c);
    for (int step = 0; step < 10000; ++step) {
      if (step % 3 == 0) kf.predict();
      std::vector<double> z = {u(rng), u(rng), u(rng)};
      const double s = z[0] + z[1] + z[2];
      for (auto& v : z) v /= s;
      kf.update(z);
      const auto& p = kf.covariance();
      ASSERT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      ASSERT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p).eigenvalues().minCoeff(), -1e-9);
      ASSERT_TRUE(kf.state().allFinite());
    }
  }
}

TEST(Kalman, StreamHelperAndNormalisedView) {
  KalmanConfig c;
  c.x0 = {0.93, 0.21, 0.01};
  const std::vector<std::vector<std::vector<double>>> steps = {
      {{0.1, 0.8, 0.1}, {0.2, 0.7, 0.1}}, {}, {{0.1, 0.1, 0.8}}};
  const auto out = kalman_fuse(steps, c);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[1], out[0]);  // no measurements, state unchanged

  KalmanFusion kf(c);
  const auto v = kf.normalized_state();
  EXPECT_NEAR(v[0] + v[1] + v[2], 1.0, 1e-12);
  EXPECT_NEAR(v[0], 0.93 / 1.15, 1e-12);
}

TEST(Kalman, InputAndConfigValidation) {
  KalmanFusion kf(two_class());
  EXPECT_THROW(kf.update(std::vector<double>{0.5, std::nan("")}), DataError);
  EXPECT_THROW(kf.update(std::vector<double>{0.5, 0.3, 0.2}), DataError);

  auto c = two_class();
  c.gamma = {1.0, 0.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = two_class();
  c.epsilon = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = two_class();
  c.x0.clear();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Kalman, ProcessNoiseForms) {
  EXPECT_TRUE(process_noise(ProcessNoise::Diagonal, 3, 5e-4).isApprox(5e-4 * Eigen::MatrixXd::Identity(3, 3)));
  const auto q = process_noise(ProcessNoise::DiscreteWhiteNoise, 2, 1.0);
  Eigen::Matrix2d want;
  want << 0.25, 0.5, 0.5, 1.0;
  EXPECT_TRUE(q.isApprox(want));
}
