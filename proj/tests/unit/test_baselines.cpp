#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "isctrack/baselines.hpp"
#include "isctrack/config.hpp"
#include "isctrack/mpc.hpp"
#include "verify/oracles.hpp"

namespace isctrack {
namespace {

Eigen::MatrixXd scalar(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

TEST(Riccati, ScalarConvergesToGoldenRatio) {
  const RiccatiSchedule s = riccati_backward(scalar(1), scalar(1), scalar(1), scalar(1), 60);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(s.P.front()(0, 0), golden, 1e-9);
  EXPECT_NEAR(verify::scalar_dare_fixed_point(1, 1, 1, 1), golden, 1e-9);
}

TEST(Riccati, ZeroStateWeightGivesZeroSchedule) {
  const ScenarioConfig cfg = default_config();
  const TransitionModel m = cfg.transition();
  const RiccatiSchedule s = riccati_backward(m.A, m.B, Mat4::Zero(), cfg.R(), 10);
  ASSERT_EQ(s.P.size(), 10u);
  ASSERT_EQ(s.K.size(), 9u);
  for (const auto& P : s.P) EXPECT_TRUE(P.isZero(0.0));
  for (const auto& K : s.K) EXPECT_TRUE(K.isZero(0.0));
}

TEST(Riccati, SingleStepIsTerminalCondition) {
  const ScenarioConfig cfg = default_config();
  const TransitionModel m = cfg.transition();
  const RiccatiSchedule s = riccati_backward(m.A, m.B, cfg.Q(), cfg.R(), 1);
  ASSERT_EQ(s.P.size(), 1u);
  EXPECT_TRUE(s.K.empty());
  EXPECT_TRUE(s.P[0].isApprox(Eigen::MatrixXd(cfg.Q()), 0.0));
}

TEST(Riccati, ScheduleIsSymmetricPsdAndSelfConsistent) {
  const ScenarioConfig cfg = default_config();
  const TransitionModel m = cfg.transition();
  const RiccatiSchedule s = riccati_backward(m.A, m.B, cfg.Q(), cfg.R(), 40);
  for (int k = 0; k + 1 < s.horizon(); ++k) {
    const Eigen::MatrixXd& P = s.P[k];
    EXPECT_LT((P - P.transpose()).norm(), 1e-12 * P.norm());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().minCoeff(), -1e-10);
    Eigen::MatrixXd K;
    const Eigen::MatrixXd again = riccati_step(m.A, m.B, cfg.Q(), cfg.R(), s.P[k + 1], &K);
    EXPECT_LT((again - P).norm(), 1e-12 * P.norm());
    const Eigen::MatrixXd Bt = m.B.transpose();
    const Eigen::MatrixXd K_ref = (Eigen::MatrixXd(cfg.R()) + Bt * s.P[k + 1] * m.B)
                                      .ldlt()
                                      .solve(Bt * s.P[k + 1] * m.A);
    EXPECT_LT((s.K[k] - K_ref).norm(), 1e-12 * K_ref.norm());
  }
}

struct LqgFixture : ::testing::Test {
  ScenarioConfig cfg = default_config();
  TransitionModel m = cfg.transition();
  RiccatiSchedule s = riccati_backward(m.A, m.B, cfg.Q(), cfg.R(), 20);
};

TEST_F(LqgFixture, ZeroErrorGivesZeroInput) {
  EXPECT_TRUE(lqg_control(Vec4::Zero(), s.K[0], Vec2(3, 1), 10, 30, 0.2).isZero(0.0));
}

TEST_F(LqgFixture, UnconstrainedIsLinearFeedback) {
  const Vec4 e(1, -2, 0.5, 0.3);
  const Vec2 u = lqg_control(e, s.K[3], Vec2::Zero(), 10, 30, 0.2);
  EXPECT_LT((u - Vec2(-s.K[3] * e)).norm(), 1e-15);
}

TEST_F(LqgFixture, SaturationAndProjection) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-500, 500), V(-29.9, 29.9);
  int projected = 0;
  for (int t = 0; t < 200; ++t) {
    const Vec4 e(U(rng), U(rng), V(rng), V(rng));
    Vec2 v(V(rng), V(rng));
    if (v.norm() > 30) v *= 29.0 / v.norm();
    const Vec2 raw = -s.K[0] * e;
    const Vec2 u = lqg_control(e, s.K[0], v, 10, 30, 0.2);
    const Vec2 clipped = raw.norm() > 10 ? Vec2(raw * (10 / raw.norm())) : raw;
    if ((v + 0.2 * clipped).norm() > 30) {
      ++projected;
      EXPECT_NEAR((v + 0.2 * u).norm(), 30.0, 1e-9);
    } else {
      EXPECT_LT((u - clipped).norm(), 1e-12);
    }
    EXPECT_LE((v + 0.2 * u).norm(), 30.0 + 1e-9);
  }
  EXPECT_GT(projected, 0);
}

struct NoncausalFixture : ::testing::Test {
  ScenarioConfig cfg = default_config("case2");
  TransitionModel model = cfg.transition();

  std::vector<Vec4> cv_targets(const Vec4& s0, int n0) const {
    std::vector<Vec4> out;
    Vec4 s = s0;
    for (int i = 0; i < n0; ++i) {
      s = model.A * s;
      out.push_back(s);
    }
    return out;
  }
};

TEST_F(NoncausalFixture, StationaryTargetAtUavGivesZeroInput) {
  const Vec4 s(10, 20, 0, 0);
  const MpcSolution sol = noncausal_mpc(std::vector<Vec4>(5, s), s, model, cfg.Q(), cfg.R(),
                                        10, 30, cfg.solver);
  ASSERT_EQ(sol.status, MpcStatus::kOptimal);
  EXPECT_LT(sol.u_hat.norm(), 1e-8);
}

TEST_F(NoncausalFixture, MatchesStochasticSolverWithoutUncertainty) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-100, 100), V(-5, 5);
  TransitionModel quiet = model;
  quiet.Qs.setZero();
  for (int t = 0; t < 10; ++t) {
    const Vec4 tgt(U(rng), 400 + U(rng), V(rng), V(rng));
    const Vec4 uav(U(rng), 150 + U(rng), V(rng), V(rng));
    const MpcSolution nc = noncausal_mpc(cv_targets(tgt, 5), uav, model, cfg.Q(), cfg.R(),
                                         cfg.mpc.a_max, cfg.mpc.v_max, cfg.solver);
    const StackedModel sm = build_stacked(uav - tgt, uav, Mat4::Zero(), quiet, 5, cfg.Q(), cfg.R());
    ProblemParams pp;
    pp.gamma = cfg.gamma();
    pp.H = cfg.scenario.altitude;
    pp.a_max = cfg.mpc.a_max;
    pp.v_max = cfg.mpc.v_max;
    pp.v_uav = uav.tail<2>();
    pp.dt = model.dt;
    const MpcSolution ref = solve(build_problem(sm, pp, {0, 0, 0, 0, 0}), cfg.solver);
    ASSERT_EQ(nc.status, MpcStatus::kOptimal);
    ASSERT_EQ(ref.status, MpcStatus::kOptimal);
    EXPECT_LT((nc.u_hat - ref.u_hat).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST_F(NoncausalFixture, ObjectiveNoWorseThanSensingConstrainedSolution) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> U(-60, 60), V(-3, 3);
  TransitionModel quiet = model;
  quiet.Qs.setZero();
  for (int t = 0; t < 10; ++t) {
    const Vec4 tgt(U(rng), 300 + U(rng), V(rng), V(rng));
    const Vec4 uav(U(rng), 200 + U(rng), V(rng), V(rng));
    const std::vector<Vec4> fut = cv_targets(tgt, 5);
    const MpcProblem known = build_known_target_problem(fut, uav, model, cfg.Q(), cfg.R(),
                                                        cfg.mpc.a_max, cfg.mpc.v_max);
    const MpcSolution nc = noncausal_mpc(fut, uav, model, cfg.Q(), cfg.R(), cfg.mpc.a_max,
                                         cfg.mpc.v_max, cfg.solver);
    const StackedModel sm = build_stacked(uav - tgt, uav, Mat4::Zero(), quiet, 5, cfg.Q(), cfg.R());
    ProblemParams pp;
    pp.gamma_th = cfg.gamma_th();
    pp.eta = cfg.eta();
    pp.gamma = cfg.gamma();
    pp.p_gu = cfg.scenario.gu_p;
    pp.H = cfg.scenario.altitude;
    pp.a_max = cfg.mpc.a_max;
    pp.v_max = cfg.mpc.v_max;
    pp.v_uav = uav.tail<2>();
    pp.dt = model.dt;
    const MpcSolution iscc = solve(build_problem(sm, pp, {1, 1, 1, 1, 1}), cfg.solver);
    if (iscc.status != MpcStatus::kOptimal) continue;
    const double f_iscc = known.objective(iscc.u_hat);
    EXPECT_LE(known.objective(nc.u_hat), f_iscc + 1e-9 * (1 + std::abs(f_iscc)))
        << known.objective(nc.u_hat) - f_iscc;
  }
}

TEST(ClosedLoop, LqrCostEqualsFullHorizonMpcWhenUnconstrained) {
  const ScenarioConfig cfg = default_config();
  const TransitionModel m = cfg.transition();
  const int N = 8;
  const RiccatiSchedule s = riccati_backward(m.A, m.B, cfg.Q(), cfg.R(), N);
  const Vec4 e1(3, -2, 0.4, 0.1);
  const double j_lqr = verify::closed_loop_lqr_cost(m.A, m.B, cfg.Q(), cfg.R(), s.K, e1);
  TransitionModel quiet = m;
  quiet.Qs.setZero();
  const StackedModel sm =
      build_stacked(e1, Vec4::Zero(), Mat4::Zero(), quiet, N - 1, cfg.Q(), cfg.R());
  ProblemParams pp;
  pp.gamma = 1;
  pp.a_max = 1e6;
  pp.v_max = 1e6;
  pp.dt = m.dt;
  const MpcProblem p = build_problem(sm, pp, std::vector<int>(N - 1, 0));
  const Eigen::VectorXd u = -p.Upsilon.llt().solve(p.g);
  EXPECT_NEAR(p.objective(u), j_lqr, 1e-6);
}

}  // namespace
}  // namespace isctrack
