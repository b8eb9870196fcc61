#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "isctrack/barrier_solver.hpp"
#include "isctrack/config.hpp"
#include "isctrack/mpc.hpp"
#include "verify/oracles.hpp"

namespace isctrack {
namespace {

struct MpcFixture : ::testing::Test {
  ScenarioConfig cfg = default_config("case2");
  TransitionModel model = cfg.transition();
  std::mt19937_64 rng{2024};

  Vec4 rand4(double pos, double vel) {
    std::uniform_real_distribution<double> P(-pos, pos), V(-vel, vel);
    return Vec4(P(rng), P(rng), V(rng), V(rng));
  }
  Eigen::VectorXd rand_u(int n0, double a) {
    std::uniform_real_distribution<double> U(-a, a);
    Eigen::VectorXd u(2 * n0);
    for (auto& x : u) x = U(rng);
    return u;
  }
  Mat4 rand_mse() {
    Mat4 L = Mat4::Zero();
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j <= i; ++j) L(i, j) = U(rng);
    return L * L.transpose() + model.Qs;
  }
  ProblemParams params(const Vec2& v_uav) const {
    ProblemParams pp;
    pp.gamma_th = cfg.gamma_th();
    pp.eta = cfg.eta();
    pp.gamma = cfg.gamma();
    pp.p_gu = cfg.scenario.gu_p;
    pp.H = cfg.scenario.altitude;
    pp.a_max = cfg.mpc.a_max;
    pp.v_max = cfg.mpc.v_max;
    pp.v_uav = v_uav;
    pp.dt = model.dt;
    return pp;
  }
};

TEST_F(MpcFixture, SingleStepStackedStructure) {
  const Vec4 e(1, 2, 3, 4), s(5, 6, 7, 8);
  const StackedModel sm = build_stacked(e, s, model.Qs, model, 1, cfg.Q(), cfg.R());
  ASSERT_EQ(sm.Lambda.size(), 1u);
  Eigen::MatrixXd L(4, 8);
  L << model.A, Mat4::Identity();
  EXPECT_TRUE(sm.Lambda[0].isApprox(L, 0.0));
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(8, 2);
  S.bottomRows<4>() = model.B;
  EXPECT_TRUE(sm.S[0].isApprox(S, 0.0));
  Eigen::VectorXd cb = Eigen::VectorXd::Zero(8);
  cb.head<4>() = e;
  EXPECT_TRUE(sm.c_bar[0].isApprox(cb, 0.0));
}

TEST_F(MpcFixture, HomogeneousPropagation) {
  const Vec4 e = rand4(50, 5);
  const StackedModel sm = build_stacked(e, Vec4::Zero(), model.Qs, model, 5, cfg.Q(), cfg.R());
  Mat4 Ai = Mat4::Identity();
  for (int i = 1; i <= 5; ++i) {
    Ai = model.A * Ai;
    const Vec4 m = sm.Lambda[i - 1] * sm.u_bar(Eigen::VectorXd::Zero(10), i);
    EXPECT_LT((m - Ai * e).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST_F(MpcFixture, MomentsMatchRecursivePropagation) {
  for (int t = 0; t < 10; ++t) {
    const Vec4 e = rand4(50, 5);
    const Mat4 M = rand_mse();
    const Eigen::VectorXd u = rand_u(5, 10);
    const StackedModel sm = build_stacked(e, Vec4::Zero(), M, model, 5, cfg.Q(), cfg.R());
    for (int i = 1; i <= 5; ++i) {
      const auto [mean, cov] = verify::recursive_moments(e, M, model, u, i);
      const Eigen::MatrixXd& L = sm.Lambda[i - 1];
      EXPECT_LT((L * sm.u_bar(u, i) - mean).norm(), 1e-10 * (1 + mean.norm()));
      EXPECT_LT((L * sm.N_bar[i - 1] * L.transpose() - cov).norm(), 1e-10 * cov.norm());
    }
  }
}

TEST_F(MpcFixture, ExpectedQuadraticPureNoise) {
  const Mat4 M = rand_mse();
  const StackedModel sm = build_stacked(Vec4::Zero(), Vec4::Zero(), M, model, 3, cfg.Q(), cfg.R());
  for (int i = 1; i <= 3; ++i) {
    const double expected = (sm.N_bar[i - 1] * sm.Lambda_q[i - 1]).trace();
    EXPECT_NEAR(expected_quadratic(sm, Eigen::VectorXd::Zero(6), i), expected, 1e-12);
  }
  const StackedModel zero_q =
      build_stacked(rand4(10, 1), Vec4::Zero(), M, model, 3, Mat4::Zero(), cfg.R());
  EXPECT_EQ(expected_quadratic(zero_q, rand_u(3, 5), 2), 0.0);
}

TEST_F(MpcFixture, ExpectedQuadraticMatchesSampling) {
  const Vec4 e = rand4(20, 2);
  const Mat4 M = rand_mse();
  const Eigen::VectorXd u = rand_u(3, 5);
  const StackedModel sm = build_stacked(e, Vec4::Zero(), M, model, 3, cfg.Q(), cfg.R());
  for (int i = 1; i <= 3; ++i) {
    const verify::SampleMean s =
        verify::sampled_quadratic(e, M, model, u, i, cfg.Q(), 100000, rng);
    EXPECT_LT(std::abs(expected_quadratic(sm, u, i) - s.mean), 5.0 * s.std_error) << i;
  }
}

TEST_F(MpcFixture, FourthMomentDeterministicCollapse) {
  const Vec4 e = rand4(40, 3);
  const Eigen::VectorXd u = rand_u(4, 8);
  const double H = 50;
  TransitionModel quiet = model;
  quiet.Qs.setZero();
  const StackedModel sm = build_stacked(e, Vec4::Zero(), Mat4::Zero(), quiet, 4, cfg.Q(), cfg.R());
  for (int i = 1; i <= 4; ++i) {
    const Eigen::VectorXd ub = sm.u_bar(u, i);
    const double d2 = ub.dot(sm.Lambda_c[i - 1] * ub) + H * H;
    EXPECT_NEAR(expected_d4(sm, u, i, H) / (d2 * d2), 1.0, 1e-12);
  }
}

TEST_F(MpcFixture, FourthMomentCentralGaussianIdentity) {
  const Mat4 M = rand_mse();
  const StackedModel sm = build_stacked(Vec4::Zero(), Vec4::Zero(), M, model, 2, cfg.Q(), cfg.R());
  for (int i = 1; i <= 2; ++i) {
    const Eigen::MatrixXd LN = sm.Lambda_c[i - 1] * sm.N_bar[i - 1];
    const double tr = LN.trace();
    const double expected = tr * tr + 2.0 * (LN * LN).trace();
    EXPECT_NEAR(expected_d4(sm, Eigen::VectorXd::Zero(4), i, 0.0) / expected, 1.0, 1e-12);
  }
}

TEST_F(MpcFixture, FourthMomentMatchesSampling) {
  for (int t = 0; t < 3; ++t) {
    const Vec4 e = rand4(30, 3);
    const Mat4 M = rand_mse();
    const Eigen::VectorXd u = rand_u(5, 10);
    const StackedModel sm = build_stacked(e, Vec4::Zero(), M, model, 5, cfg.Q(), cfg.R());
    const int i = 1 + t * 2;
    const verify::SampleMean s = verify::sampled_d4(e, M, model, u, i, 50.0, 200000, rng);
    EXPECT_LT(std::abs(expected_d4(sm, u, i, 50.0) - s.mean), 5.0 * s.std_error);
  }
}

TEST_F(MpcFixture, ObjectiveMatchesTermByTermSum) {
  for (int t = 0; t < 10; ++t) {
    const Vec4 s_uav(0, 150, 1, -1);
    const StackedModel sm = build_stacked(rand4(60, 5), s_uav, rand_mse(), model, 5,
                                          cfg.Q(), cfg.R());
    const MpcProblem p = build_problem(sm, params(s_uav.tail<2>()), {1, 1, 1, 1, 1});
    const Eigen::VectorXd u = rand_u(5, 10);
    double direct = 0.0;
    for (int i = 1; i <= 5; ++i) {
      const Vec2 ui = u.segment<2>(2 * (i - 1));
      direct += expected_quadratic(sm, u, i) + ui.dot(cfg.R() * ui);
    }
    EXPECT_NEAR(p.objective(u) / direct, 1.0, 1e-9);
  }
}

TEST_F(MpcFixture, SensingConstraintMatchesTermByTermValue) {
  const ProblemParams pp = params(Vec2(2, -1));
  for (int t = 0; t < 10; ++t) {
    const Vec4 s_uav(10, 150, 2, -1);
    const StackedModel sm = build_stacked(rand4(60, 5), s_uav, rand_mse(), model, 5,
                                          cfg.Q(), cfg.R());
    const std::vector<int> deltas = {1, 0, 1, 1, 0};
    const MpcProblem p = build_problem(sm, pp, deltas);
    const Eigen::VectorXd u = rand_u(5, 10);
    for (int i = 1; i <= 5; ++i) {
      const double direct = deltas[i - 1] * pp.eta * gu_distance_sq(sm, u, i, pp.p_gu, pp.H) +
                            pp.gamma_th * expected_d4(sm, u, i, pp.H) - pp.gamma;
      EXPECT_NEAR(p.sensing[i - 1].value(u), direct, 1e-9 * pp.gamma);
    }
  }
}

TEST_F(MpcFixture, ZeroDeltaDropsRateTerms) {
  ProblemParams pp = params(Vec2::Zero());
  const Vec4 s_uav(0, 150, 0, 0);
  const StackedModel sm = build_stacked(rand4(60, 5), s_uav, rand_mse(), model, 2, cfg.Q(), cfg.R());
  const MpcProblem with = build_problem(sm, pp, {0, 0});
  pp.eta = 0.0;
  const MpcProblem without = build_problem(sm, pp, {1, 1});
  for (int i = 0; i < 2; ++i) {
    EXPECT_TRUE(with.Xi[i].isApprox(without.Xi[i], 1e-14));
    EXPECT_TRUE(with.zeta[i].isApprox(without.zeta[i], 1e-14));
    EXPECT_NEAR(with.varpi[i], without.varpi[i], 1e-12 * std::abs(with.varpi[i]));
  }
}

TEST_F(MpcFixture, UnconstrainedSolveMatchesLinearSolve) {
  for (int t = 0; t < 5; ++t) {
    const Vec4 s_uav(0, 150, 0, 0);
    ProblemParams pp = params(Vec2::Zero());
    pp.gamma_th = 0.0;
    pp.a_max = 1e6;
    pp.v_max = 1e6;
    const StackedModel sm = build_stacked(rand4(60, 5), s_uav, rand_mse(), model, 5,
                                          cfg.Q(), cfg.R());
    const MpcProblem p = build_problem(sm, pp, {0, 0, 0, 0, 0});
    const MpcSolution sol = solve(p, cfg.solver);
    ASSERT_EQ(sol.status, MpcStatus::kOptimal);
    const Eigen::VectorXd x = -p.Upsilon.llt().solve(p.g);
    EXPECT_LT((sol.u_hat - x).norm(), 1e-8 * std::max(1.0, x.norm()));
    EXPECT_LT(sol.kkt_residual, 1e-6);
  }
}

TEST_F(MpcFixture, ConstrainedSolveRespectsBounds) {
  const Vec4 s_uav(0, 150, 25, 0);
  const StackedModel sm = build_stacked(Vec4(-400, 0, -20, 0), s_uav, model.Qs, model, 5,
                                        cfg.Q(), cfg.R());
  const MpcProblem p = build_problem(sm, params(s_uav.tail<2>()), {1, 1, 1, 1, 1});
  const MpcSolution sol = solve(p, cfg.solver);
  ASSERT_TRUE(sol.status == MpcStatus::kOptimal || sol.status == MpcStatus::kSoftFeasible);
  Vec2 v = s_uav.tail<2>();
  for (int i = 0; i < 5; ++i) {
    const Vec2 ui = sol.u_hat.segment<2>(2 * i);
    EXPECT_LE(ui.norm(), cfg.mpc.a_max * (1 + 1e-9));
    v += model.dt * ui;
    EXPECT_LE(v.norm(), cfg.mpc.v_max * (1 + 1e-9));
  }
}

TEST(QuarticForm, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0, 1);
  const int n = 4;
  Eigen::MatrixXd A(n, n), B(n, n);
  for (auto* M : {&A, &B})
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*M)(i, j) = N(rng);
  QuarticForm f;
  f.alpha = 0.3;
  f.P = A * A.transpose();
  f.b = Eigen::VectorXd::Random(n);
  f.c = 5.0;
  f.X = B * B.transpose();
  f.z = Eigen::VectorXd::Random(n);
  f.w = -2.0;
  const Eigen::VectorXd x = Eigen::VectorXd::Random(n);
  const double h = 1e-5;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = h;
    const double fd = (f.value(x + e) - f.value(x - e)) / (2 * h);
    EXPECT_NEAR(fd, f.gradient(x)(i), 1e-6 * std::max(1.0, std::abs(fd)));
    const Eigen::VectorXd gd = (f.gradient(x + e) - f.gradient(x - e)) / (2 * h);
    EXPECT_LT((gd - f.hessian(x).col(i)).norm(), 1e-6 * std::max(1.0, gd.norm()));
  }
}

TEST(BarrierSolver, BoxConstrainedQuadratic) {
  // min (x-3)^2 + (y+1)^2 s.t. x^2 <= 1, y^2 <= 4: optimum (1, -1).
  ConvexProgram prog;
  prog.P0 = Eigen::MatrixXd::Identity(2, 2);
  prog.q0 = Eigen::Vector2d(-3, 1);
  prog.r0 = 10;
  Eigen::MatrixXd ex = Eigen::MatrixXd::Zero(2, 2), ey = ex;
  ex(0, 0) = 1;
  ey(1, 1) = 1;
  prog.constraints.push_back(QuarticForm::quadratic(ex, Eigen::VectorXd::Zero(2), -1));
  prog.constraints.push_back(QuarticForm::quadratic(ey, Eigen::VectorXd::Zero(2), -4));
  const BarrierResult r = barrier_minimize(prog, Eigen::VectorXd::Zero(2), SolverOptions{});
  ASSERT_EQ(r.status, BarrierStatus::kConverged);
  EXPECT_NEAR(r.x(0), 1.0, 1e-8);
  EXPECT_NEAR(r.x(1), -1.0, 1e-8);
  EXPECT_NEAR(r.objective, 4.0, 1e-8);
  EXPECT_LT(r.kkt_residual, 1e-8);
  EXPECT_LT(verify::nnls_kkt_residual(prog, r.x), 1e-8);
}

TEST(BarrierSolver, PhaseOneFindsInteriorOrReportsInfeasible) {
  ConvexProgram prog;
  prog.P0 = Eigen::MatrixXd::Identity(2, 2);
  prog.q0 = Eigen::VectorXd::Zero(2);
  // (x-5)^2 + y^2 <= 1
  prog.constraints.push_back(QuarticForm::quadratic(Eigen::MatrixXd::Identity(2, 2),
                                                    Eigen::Vector2d(-5, 0), 24));
  const PhaseOneResult ok = find_strictly_feasible(prog, Eigen::VectorXd::Zero(2), SolverOptions{});
  ASSERT_TRUE(ok.feasible);
  EXPECT_LT(prog.max_violation(ok.x), 0.0);
  // Add x <= 2 via x^2 <= 4: empty intersection.
  Eigen::MatrixXd ex = Eigen::MatrixXd::Zero(2, 2);
  ex(0, 0) = 1;
  prog.constraints.push_back(QuarticForm::quadratic(ex, Eigen::VectorXd::Zero(2), -4));
  const PhaseOneResult bad = find_strictly_feasible(prog, Eigen::VectorXd::Zero(2), SolverOptions{});
  EXPECT_FALSE(bad.feasible);
}

}  // namespace
}  // namespace isctrack
