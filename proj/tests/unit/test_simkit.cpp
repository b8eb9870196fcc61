#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isctrack/config.hpp"
#include "isctrack/io.hpp"
#include "isctrack/simkit.hpp"

namespace isctrack {
namespace {

std::string csv(const EpisodeTrace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  return os.str();
}

EpisodeTrace fixture_trace(const std::vector<Vec4>& errors) {
  EpisodeTrace t;
  int n = 1;
  for (const Vec4& e : errors) {
    SlotRecord s;
    s.n = n++;
    s.uav = MotionState(e);
    s.target = MotionState();
    s.estimate = Vec4::Zero();
    s.rate = 3.0;
    t.slots.push_back(s);
  }
  return t;
}

TEST(RunEpisode, NoiselessClairvoyantRunRegulates) {
  ScenarioConfig cfg = default_config("case2");
  cfg.dynamics.noise = {0, 0, 0, 0};
  const EpisodeTrace t = run_episode(cfg, Controller::kNoncausal, 5);
  ASSERT_FALSE(t.aborted) << t.diagnostic;
  ASSERT_EQ(t.slots.size(), 300u);
  EXPECT_LT(t.slots.back().error().norm(), t.slots.front().error().norm() / 10);
  EXPECT_LE(t.control_energy(), 300 * cfg.mpc.a_max * cfg.mpc.a_max * (1 + 1e-9));
}

TEST(RunEpisode, SameSeedSameBytes) {
  ScenarioConfig cfg = default_config("case2");
  cfg.scenario.steps = 60;
  for (Controller c : {Controller::kIscc, Controller::kLqg, Controller::kNoncausal}) {
    EXPECT_EQ(csv(run_episode(cfg, c, 9)), csv(run_episode(cfg, c, 9))) << to_string(c);
  }
}

TEST(RunEpisode, ControllersShareTheTargetPath) {
  ScenarioConfig cfg = default_config("case2");
  cfg.scenario.steps = 40;
  const EpisodeTrace a = run_episode(cfg, Controller::kIscc, 3);
  const EpisodeTrace b = run_episode(cfg, Controller::kLqg, 3);
  for (std::size_t n = 0; n < a.slots.size(); ++n) {
    EXPECT_EQ(a.slots[n].target.vec(), b.slots[n].target.vec());
  }
}

TEST(RunEpisode, IsccMeetsRateWheneverSolverIsOptimal) {
  const ScenarioConfig cfg = default_config("case2");
  for (std::uint64_t seed : {1u, 2u}) {
    const EpisodeTrace t = run_episode(cfg, Controller::kIscc, seed);
    ASSERT_FALSE(t.aborted) << t.diagnostic;
    int checked = 0;
    for (const SlotRecord& s : t.slots) {
      if (s.bf_status != "optimal") continue;
      ++checked;
      EXPECT_GE(s.rate, cfg.rf.rate_th - 1e-9) << "slot " << s.n;
    }
    EXPECT_GT(checked, 200);
  }
}

TEST(RunEpisode, InputsRespectAccelerationBound) {
  const ScenarioConfig cfg = default_config("case2");
  const EpisodeTrace t = run_episode(cfg, Controller::kIscc, 4);
  for (const SlotRecord& s : t.slots) {
    EXPECT_LE(s.u.norm(), cfg.mpc.a_max * (1 + 1e-9));
    EXPECT_LE(s.uav.v.norm(), cfg.mpc.v_max * (1 + 1e-9));
  }
}

TEST(Metrics, AllZeroErrors) {
  const TrialMetrics m = compute_metrics({fixture_trace({Vec4::Zero(), Vec4::Zero()})}, 2.5);
  for (double x : m.rms_e) EXPECT_EQ(x, 0.0);
  for (double x : m.rmse_p) EXPECT_EQ(x, 0.0);
  for (double x : m.rmse_v) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(m.mean_rate_ok, 1.0);
}

TEST(Metrics, SingleTrialConstantError) {
  const Vec4 e(3, 0, 0, 4);
  const TrialMetrics m = compute_metrics({fixture_trace({e, e, e})}, 2.5);
  for (double x : m.rms_e) EXPECT_DOUBLE_EQ(x, 5.0);
}

TEST(Metrics, HandComputedTwoByTwo) {
  // Trial A errors: (1,0,0,0), (0,2,0,0); trial B: (3,0,0,0), (0,0,0,4).
  EpisodeTrace a = fixture_trace({Vec4(1, 0, 0, 0), Vec4(0, 2, 0, 0)});
  EpisodeTrace b = fixture_trace({Vec4(3, 0, 0, 0), Vec4(0, 0, 0, 4)});
  // Estimates off by (1,1,0,0) in slot 1 of trial A only; rate misses once in B.
  a.slots[0].estimate = Vec4(1, 1, 0, 0);
  b.slots[1].rate = 1.0;
  const TrialMetrics m = compute_metrics({a, b}, 2.5);
  EXPECT_DOUBLE_EQ(m.rms_e[0], std::sqrt((1.0 + 9.0) / 2));
  EXPECT_DOUBLE_EQ(m.rms_e[1], std::sqrt((4.0 + 16.0) / 2));
  EXPECT_DOUBLE_EQ(m.rmse_p[0], 1.0);
  EXPECT_DOUBLE_EQ(m.rmse_p[1], 0.0);
  EXPECT_EQ(m.rate_ok_fraction, (std::vector<double>{1.0, 0.5}));
  EXPECT_DOUBLE_EQ(m.mean_rate_ok, 0.75);
  EXPECT_DOUBLE_EQ(m.min_rate_ok, 0.5);
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(compute_metrics({}, 2.5), std::invalid_argument);
  EpisodeTrace bad = fixture_trace({Vec4::Zero()});
  bad.aborted = true;
  EXPECT_THROW(compute_metrics({bad}, 2.5), std::invalid_argument);
  EXPECT_THROW(compute_metrics({fixture_trace({Vec4::Zero()}),
                                fixture_trace({Vec4::Zero(), Vec4::Zero()})},
                               2.5),
               std::invalid_argument);
}

TEST(MonteCarlo, SingleTrialIsTheTraceError) {
  ScenarioConfig cfg = default_config("case2");
  cfg.scenario.steps = 30;
  const TrialMetrics m = run_monte_carlo(cfg, Controller::kLqg, 1, 77, 1);
  const EpisodeTrace t = run_episode(cfg, Controller::kLqg, 77);
  for (std::size_t n = 0; n < t.slots.size(); ++n) {
    EXPECT_NEAR(m.rms_e[n], t.slots[n].error().norm(), 1e-12);
  }
}

TEST(MonteCarlo, InvariantToTrialOrderAndWorkerCount) {
  ScenarioConfig cfg = default_config("case2");
  cfg.scenario.steps = 30;
  std::vector<EpisodeTrace> traces = run_trials(cfg, Controller::kIscc, 4, 10, 1);
  const std::vector<EpisodeTrace> parallel = run_trials(cfg, Controller::kIscc, 4, 10, 4);
  for (std::size_t i = 0; i < traces.size(); ++i) EXPECT_EQ(csv(traces[i]), csv(parallel[i]));
  const TrialMetrics fwd = compute_metrics(traces, cfg.rf.rate_th);
  std::reverse(traces.begin(), traces.end());
  const TrialMetrics rev = compute_metrics(traces, cfg.rf.rate_th);
  for (std::size_t n = 0; n < fwd.rms_e.size(); ++n) {
    EXPECT_NEAR(fwd.rms_e[n], rev.rms_e[n], 1e-12 * (1 + fwd.rms_e[n]));
    EXPECT_NEAR(fwd.rmse_p[n], rev.rmse_p[n], 1e-12 * (1 + fwd.rmse_p[n]));
  }
  EXPECT_NEAR(fwd.mean_rate_ok, rev.mean_rate_ok, 1e-15);
}

TEST(Controllers, NamesRoundTrip) {
  for (Controller c : {Controller::kIscc, Controller::kLqg, Controller::kNoncausal}) {
    EXPECT_EQ(parse_controller(to_string(c)), c);
  }
  EXPECT_THROW(parse_controller("mpc"), std::invalid_argument);
}

}  // namespace
}  // namespace isctrack
