#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "isctrack/config.hpp"
#include "isctrack/estimator.hpp"
#include "verify/oracles.hpp"

namespace isctrack {
namespace {

struct EstimatorFixture : ::testing::Test {
  ScenarioConfig cfg = default_config("case2");
  RfConstants k = cfg.rf_constants();
  ArrayGeometry geom = cfg.geometry();
  TransitionModel model = cfg.transition();

  Beamformer mrt(const Vec2& from, const Vec2& to) const {
    const CVec a = steering_vector(from, to, k.H, geom.mx_t, geom.my_t);
    return {std::sqrt(cfg.rf.tx_power) * a / a.norm()};
  }
};

TEST_F(EstimatorFixture, PredictionOfZeroIsZero) {
  for (const Vec4& s : predict_states(Vec4::Zero(), model.A, 5)) {
    EXPECT_TRUE(s.isZero(0.0));
  }
}

TEST_F(EstimatorFixture, PredictionIsLinearDrift) {
  const std::vector<Vec4> p = predict_states(Vec4(0, 400, 0, -1), model.A, 5);
  ASSERT_EQ(p.size(), 5u);
  EXPECT_TRUE(p[4].isApprox(Vec4(0, 399, 0, -1), 1e-14));
}

TEST_F(EstimatorFixture, PredictionMatchesMatrixPowers) {
  const Vec4 s(3, -2, 0.5, 1.5);
  const std::vector<Vec4> p = predict_states(s, model.A, 6);
  Mat4 Ai = Mat4::Identity();
  for (int i = 0; i < 6; ++i) {
    Ai = model.A * Ai;
    EXPECT_LT((p[i] - Ai * s).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST_F(EstimatorFixture, JacobianRangeAndDopplerRows) {
  const MotionState uav({0, 150}, {2, 1});
  const Vec4 s(12, 390, 2, 1);  // same velocity as the UAV
  const Eigen::MatrixXd F = measurement_jacobian(s, uav, mrt(uav.p, s.head<2>()), k, geom);
  const Vec2 dp = uav.p - s.head<2>();
  const double d = distance(uav.p, s.head<2>(), k.H);
  EXPECT_NEAR(F(0, 0), -dp.x() / d, 1e-14);
  EXPECT_NEAR(F(0, 1), -dp.y() / d, 1e-14);
  EXPECT_EQ(F(0, 2), 0.0);
  EXPECT_EQ(F(0, 3), 0.0);
  const double scale = 2.0 * k.fc / (k.c * d);
  EXPECT_NEAR(F(1, 2) / (scale * dp.x()), 1.0, 1e-12);
  EXPECT_NEAR(F(1, 3) / (scale * dp.y()), 1.0, 1e-12);
}

TEST_F(EstimatorFixture, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-200, 200);
  std::uniform_real_distribution<double> V(-5, 5);
  for (int t = 0; t < 30; ++t) {
    const MotionState uav({U(rng), U(rng)}, {V(rng), V(rng)});
    const Vec4 s(U(rng), U(rng) + 250, V(rng), V(rng));
    const Beamformer w = mrt(uav.p, s.head<2>() + Vec2(3, -2));
    const Eigen::MatrixXd F = measurement_jacobian(s, uav, w, k, geom);
    const Eigen::MatrixXd Ffd = verify::fd_jacobian(s, uav, w, k, geom, 1e-4);
    EXPECT_LT(verify::rowwise_relative_error(F, Ffd), 1e-5);
  }
}

TEST_F(EstimatorFixture, ZeroInnovationKeepsPrediction) {
  const MotionState uav({0, 150}, {0, 0});
  const Vec4 s0(5, 395, 1.5, -2);
  const EstimatorState prior = initial_estimate(s0, model.Qs, model);
  const Beamformer w = mrt(uav.p, prior.s_check.head<2>());
  Measurement m = make_measurement(uav, MotionState(prior.s_check), w, k, geom,
                                   Eigen::VectorXd::Zero(2 + 2 * geom.rx_count()));
  m.Qm = measurement_covariance(w, uav.p, prior.s_check.head<2>(), k, geom);
  const EstimatorState post = ekf_step(prior, m, model, uav, w, k, geom);
  EXPECT_LT((post.s_hat - prior.s_check).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LE(post.M_hat.trace(), prior.M_check.trace());
}

TEST_F(EstimatorFixture, HugeMeasurementNoiseLeavesPrior) {
  const MotionState uav({0, 150}, {0, 0});
  const MotionState tgt({8, 392}, {1.4, -2.1});
  const EstimatorState prior = initial_estimate(Vec4(5, 395, 1.5, -2), model.Qs, model);
  const Beamformer w = mrt(uav.p, prior.s_check.head<2>());
  std::mt19937_64 rng(4);
  Measurement m = sample_measurement(uav, tgt, w, k, geom, rng);
  m.Qm *= 1e6;
  const EstimatorState post = ekf_step(prior, m, model, uav, w, k, geom);
  const Eigen::VectorXd innov =
      m.stacked() - measurement_mean(uav, MotionState(prior.s_check), w, k, geom);
  EXPECT_LT((post.s_hat - prior.s_check).norm(), 1e-3 * innov.norm());
}

TEST_F(EstimatorFixture, UpdateMatchesInformationFormKalmanFilter) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-30, 30);
  for (int t = 0; t < 20; ++t) {
    const MotionState uav({U(rng), 150 + U(rng)}, {U(rng) / 10, U(rng) / 10});
    const MotionState tgt({U(rng), 390 + U(rng)}, {1.5, -2});
    Mat4 M = model.Qs;
    M.diagonal() += Vec4(4, 4, 0.5, 0.5);
    const EstimatorState prior =
        initial_estimate(tgt.vec() + Vec4(U(rng) / 10, U(rng) / 10, 0.1, -0.1), M, model);
    const Beamformer w = mrt(uav.p, prior.s_check.head<2>());
    const Measurement m = sample_measurement(uav, tgt, w, k, geom, rng);
    const EstimatorState post = ekf_step(prior, m, model, uav, w, k, geom);

    const Eigen::MatrixXd F = measurement_jacobian(prior.s_check, uav, w, k, geom);
    const Eigen::VectorXd innov =
        m.stacked() - measurement_mean(uav, MotionState(prior.s_check), w, k, geom);
    const auto [s_ref, M_ref] =
        verify::information_form_update(prior.s_check, prior.M_check, F, m.Qm, innov);
    EXPECT_LT((post.s_hat - s_ref).norm(), 1e-10 * std::max(1.0, s_ref.norm()));
    EXPECT_LT((post.M_hat - M_ref).norm(), 1e-10 * M_ref.norm());
    EXPECT_TRUE(post.s_check.isApprox(model.A * post.s_hat, 1e-14));
  }
}

TEST_F(EstimatorFixture, InitialEstimatePropagatesOneStep) {
  const Vec4 s(1, 2, 3, 4);
  const EstimatorState e = initial_estimate(s, model.Qs, model);
  EXPECT_TRUE(e.s_hat.isApprox(s));
  EXPECT_TRUE(e.s_check.isApprox(model.A * s));
  EXPECT_TRUE(e.M_check.isApprox(model.A * model.Qs * model.A.transpose() + model.Qs));
}

}  // namespace
}  // namespace isctrack
