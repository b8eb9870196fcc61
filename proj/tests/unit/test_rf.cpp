#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "isctrack/config.hpp"
#include "isctrack/errors.hpp"
#include "isctrack/rf.hpp"
#include "verify/oracles.hpp"

namespace isctrack {
namespace {

struct RfFixture : ::testing::Test {
  ScenarioConfig cfg = default_config("case2");
  RfConstants k = cfg.rf_constants();
  ArrayGeometry geom = cfg.geometry();

  Beamformer mrt(const Vec2& from, const Vec2& to) const {
    const CVec a = steering_vector(from, to, k.H, geom.mx_t, geom.my_t);
    return {std::sqrt(cfg.rf.tx_power) * a / a.norm()};
  }
};

TEST_F(RfFixture, SteeringVectorStraightBelowIsAllOnes) {
  const CVec a = steering_vector({10, 20}, {10, 20}, 50, 4, 4);
  ASSERT_EQ(a.size(), 16);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(std::abs(a(i) - cdouble(1, 0)), 0.0, 1e-15);
  }
}

TEST_F(RfFixture, SteeringVectorEntriesHaveUnitModulus) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-400, 400);
  for (int t = 0; t < 50; ++t) {
    const CVec a = steering_vector({U(rng), U(rng)}, {U(rng), U(rng)}, 50, 4, 8);
    EXPECT_NEAR(a.squaredNorm(), 32.0, 1e-11);
    EXPECT_NEAR(a.cwiseAbs().maxCoeff(), 1.0, 1e-14);
    EXPECT_NEAR(a.cwiseAbs().minCoeff(), 1.0, 1e-14);
  }
}

TEST_F(RfFixture, SteeringVectorMatchesElementLoop) {
  const CVec a = steering_vector({0, 100}, {300, 50}, 50, 4, 4);
  const CVec b = verify::naive_steering_vector({0, 100}, {300, 50}, 50, 4, 4);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-300, 300);
  for (int t = 0; t < 50; ++t) {
    const Vec2 p(U(rng), U(rng));
    const Vec2 q(U(rng), U(rng));
    const CVec x = steering_vector(p, q, 50, 3, 5);
    const CVec y = verify::naive_steering_vector(p, q, 50, 3, 5);
    EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(RfFixture, DistanceValues) {
  EXPECT_NEAR(distance({0, 100}, {0, 400}, 50), std::sqrt(92500.0), 1e-12);
  EXPECT_NEAR(distance({0, 100}, {0, 400}, 50), 304.1381, 1e-4);
  EXPECT_DOUBLE_EQ(distance({7, 7}, {7, 7}, 50), 50.0);
  EXPECT_DOUBLE_EQ(distance({1, 2}, {30, -4}, 50), distance({30, -4}, {1, 2}, 50));
}

TEST_F(RfFixture, RateZeroForZeroBeam) {
  const Beamformer w{CVec::Zero(16)};
  EXPECT_EQ(achievable_rate({0, 150}, cfg.scenario.gu_p, w, k, geom), 0.0);
}

TEST_F(RfFixture, RateZeroForOrthogonalBeam) {
  const Vec2 uav(0, 150);
  const CVec a = steering_vector(uav, cfg.scenario.gu_p, k.H, 4, 4);
  CVec w = CVec::Zero(16);
  // a^H w = |a_0|^2 - |a_1|^2 = 0 for a unit-modulus vector.
  w(0) = a(0);
  w(1) = -a(1);
  EXPECT_NEAR(achievable_rate(uav, cfg.scenario.gu_p, {w}, k, geom), 0.0, 1e-12);
}

TEST_F(RfFixture, RateUnderMrtMatchesClosedForm) {
  const Vec2 uav(0, 150);
  const Vec2 gu = cfg.scenario.gu_p;
  const Beamformer w = mrt(uav, gu);
  const double dc = distance(uav, gu, k.H);
  const double expected =
      std::log2(1.0 + k.beta0 * 16 * cfg.rf.tx_power / (dc * dc * k.sigma_c2));
  EXPECT_NEAR(achievable_rate(uav, gu, w, k, geom), expected, 1e-12);
  // Explicit inner product with the element loop.
  const CVec a = verify::naive_steering_vector(uav, gu, k.H, 4, 4);
  cdouble ip = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) ip += std::conj(a(i)) * w.w(i);
  const double direct = std::log2(1.0 + k.beta0 * std::norm(ip) / (dc * dc * k.sigma_c2));
  EXPECT_NEAR(achievable_rate(uav, gu, w, k, geom), direct, 1e-12);
}

TEST_F(RfFixture, NoiseVariancesScaleInverselyWithBeamGain) {
  const Vec2 uav(0, 150), tgt(20, 380);
  const Beamformer w = mrt(uav, tgt);
  const auto [s1, s2] = measurement_noise_vars(w, uav, tgt, k, geom);
  const auto [t1, t2] = measurement_noise_vars({2.0 * w.w}, uav, tgt, k, geom);
  EXPECT_NEAR(t1 / s1, 0.25, 1e-12);
  EXPECT_NEAR(t2 / s2, 0.25, 1e-12);
}

TEST_F(RfFixture, NoiseVarianceRatioFollowsCoefficients) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0, 1);
  for (int t = 0; t < 20; ++t) {
    CVec w(16);
    for (auto& x : w) x = cdouble(N(rng), N(rng));
    const auto [s1, s2] = measurement_noise_vars({w}, {0, 150}, {10, 400}, k, geom);
    EXPECT_NEAR(s2 / s1, 25.0, 1e-10);
  }
}

TEST_F(RfFixture, NoiseVariancesMatchSecondImplementation) {
  const Vec2 uav(-40, 120), tgt(35, 390);
  const Beamformer w = mrt(uav, {30, 400});
  const CVec a = verify::naive_steering_vector(uav, tgt, k.H, 4, 4);
  const double gain = std::norm(a.dot(w.w));
  const double d2 = (uav - tgt).squaredNorm() + k.H * k.H;
  const double lambda = k.c / k.fc;
  const double beta_r = lambda * lambda * k.rcs / (64 * std::pow(M_PI, 3));
  const double snr = k.G * 16 * beta_r * gain / (d2 * d2 * k.sigma_r2);
  const auto [s1, s2] = measurement_noise_vars(w, uav, tgt, k, geom);
  EXPECT_NEAR(s1 / (k.a1 * k.a1 / snr), 1.0, 1e-10);
  EXPECT_NEAR(s2 / (k.a2 * k.a2 / snr), 1.0, 1e-10);
  EXPECT_NEAR(echo_snr(w, uav, tgt, k, geom) / snr, 1.0, 1e-10);
}

TEST_F(RfFixture, NoiseVariancesRejectZeroGain) {
  EXPECT_THROW(measurement_noise_vars({CVec::Zero(16)}, {0, 150}, {0, 400}, k, geom),
               InfeasibleError);
}

TEST_F(RfFixture, NoiselessMeasurementWithoutRelativeMotion) {
  const MotionState uav({0, 150}, {1, -2});
  const MotionState tgt({15, 390}, {1, -2});
  const Beamformer w = mrt(uav.p, tgt.p);
  const int len = 2 + 2 * geom.rx_count();
  const Measurement m = make_measurement(uav, tgt, w, k, geom, Eigen::VectorXd::Zero(len));
  EXPECT_EQ(m.mu_hat, 0.0);
  EXPECT_DOUBLE_EQ(m.d_hat, distance(uav.p, tgt.p, k.H));
  EXPECT_EQ(m.stacked().size(), len);
}

TEST_F(RfFixture, SampledRangeVarianceMatchesModel) {
  const MotionState uav({0, 150}, {0, 0});
  const MotionState tgt({5, 200}, {1.5, -2});
  const Beamformer w = mrt(uav.p, tgt.p);
  const double s1 = measurement_noise_vars(w, uav.p, tgt.p, k, geom).first;
  const double d = distance(uav.p, tgt.p, k.H);
  std::mt19937_64 rng(11);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < n; ++t) {
    const double x = sample_measurement(uav, tgt, w, k, geom, rng).d_hat - d;
    sum += x;
    sq += x * x;
  }
  const double var = sq / n - (sum / n) * (sum / n);
  EXPECT_LT(std::abs(var - s1), 5.0 * s1 * std::sqrt(2.0 / n));
}

TEST_F(RfFixture, ThresholdsUseLinearUnits) {
  EXPECT_NEAR(rate_eta(k, 0.0), 0.0, 0.0);
  EXPECT_NEAR(rate_eta(k, 1.0), k.sigma_c2 / k.beta0, 1e-18);
  // Meeting the threshold exactly gives the threshold SNR.
  const Vec2 uav(0, 150), tgt(0, 400);
  const Beamformer w = mrt(uav, tgt);
  const double gain = std::norm(steering_vector(uav, tgt, k.H, 4, 4).dot(w.w));
  const double d = distance(uav, tgt, k.H);
  const double gth = sensing_threshold(k, geom, cfg.rf.snr_th);
  EXPECT_NEAR(echo_snr(w, uav, tgt, k, geom) / cfg.rf.snr_th,
              gain / (gth * std::pow(d, 4)), 1e-9);
}

}  // namespace
}  // namespace isctrack
