#include "isctrack/simkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <thread>

#include "isctrack/baselines.hpp"
#include "isctrack/beamforming.hpp"
#include "isctrack/errors.hpp"
#include "isctrack/estimator.hpp"
#include "isctrack/mpc.hpp"
#include "isctrack/rf.hpp"

namespace isctrack {

namespace {

// Independent engines per noise source, all derived from the trial seed.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

struct BeamChoice {
  Beamformer w;
  bool rate_reachable = true;
};

// Sensing-centric beam toward the predicted target; MRT to the GU when the
// rate threshold is out of reach.
BeamChoice design_beam(const Vec2& p_uav, const Vec2& p_target_pred,
                       const ScenarioConfig& cfg, const RfConstants& k,
                       const ArrayGeometry& geom) {
  const FeasibilityInputs in =
      make_feasibility_inputs(p_uav, p_target_pred, cfg.scenario.gu_p, k, geom,
                              cfg.rf.tx_power, cfg.rf.rate_th, 0.0);
  try {
    return {sensing_centric_w(in, cfg.rf.tx_power), true};
  } catch (const InfeasibleError&) {
    return {Beamformer{std::sqrt(cfg.rf.tx_power) * in.a_gu / in.a_gu.norm()},
            false};
  }
}

int thread_budget(int requested, int trials) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ISCTRACK_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) {
      n = std::min(n, cap);
    }
  }
  return std::clamp(n, 1, std::max(trials, 1));
}

}  // namespace

std::string to_string(Controller c) {
  switch (c) {
    case Controller::kIscc:
      return "iscc";
    case Controller::kLqg:
      return "lqg";
    case Controller::kNoncausal:
      return "noncausal";
  }
  return "unknown";
}

Controller parse_controller(const std::string& name) {
  if (name == "iscc") return Controller::kIscc;
  if (name == "lqg") return Controller::kLqg;
  if (name == "noncausal") return Controller::kNoncausal;
  throw std::invalid_argument("unknown controller '" + name + "'");
}

double EpisodeTrace::control_energy() const {
  double e = 0.0;
  for (const auto& s : slots) {
    e += s.u.squaredNorm();
  }
  return e;
}

EpisodeTrace run_episode(const ScenarioConfig& cfg, Controller controller,
                         std::uint64_t seed) {
  cfg.validate();
  EpisodeTrace trace;
  trace.controller = controller;
  trace.seed = seed;

  const TransitionModel model = cfg.transition();
  const RfConstants k = cfg.rf_constants();
  const ArrayGeometry geom = cfg.geometry();
  const int N = cfg.scenario.steps;
  const int N0 = cfg.mpc.horizon;
  const Vec2 gu = cfg.scenario.gu_p;
  const Mat4 Q = cfg.Q();
  const Eigen::Matrix2d R = cfg.R();

  std::mt19937_64 rng_target = make_engine(seed, 1);
  std::mt19937_64 rng_sense = make_engine(seed, 2);
  std::mt19937_64 rng_init = make_engine(seed, 3);

  // Ground truth, long enough for the clairvoyant look-ahead.
  std::vector<MotionState> tgt(N + N0);
  tgt[0] = MotionState(cfg.scenario.target_p0, cfg.scenario.target_v0);
  for (int n = 1; n < N + N0; ++n) {
    tgt[n] = step_target(tgt[n - 1], model, sample_process_noise(model, rng_target));
  }

  // Initial MSE is diagonal, so its square root is elementwise.
  const Mat4 M_init = cfg.initial_mse();
  std::normal_distribution<double> std_normal(0.0, 1.0);
  Vec4 z;
  for (int i = 0; i < 4; ++i) z(i) = std_normal(rng_init);
  const Vec4 s_init = tgt[0].vec() + M_init.diagonal().cwiseSqrt().cwiseProduct(z);

  EstimatorState est = initial_estimate(s_init, M_init, model);

  RiccatiSchedule lqr;
  if (controller == Controller::kLqg) {
    lqr = riccati_backward(model.A, model.B, Q, R, N + 1);
  }

  ProblemParams params;
  params.gamma_th = cfg.gamma_th();
  params.eta = cfg.eta();
  params.gamma = cfg.gamma();
  params.p_gu = gu;
  params.H = cfg.scenario.altitude;
  params.a_max = cfg.mpc.a_max;
  params.v_max = cfg.mpc.v_max;
  params.dt = model.dt;

  MotionState uav(cfg.scenario.uav_p0, cfg.scenario.uav_v0);
  BeamChoice beam = design_beam(uav.p, s_init.head<2>(), cfg, k, geom);
  std::string bf_status = beam.rate_reachable ? "init" : "rate_unreachable";

  trace.slots.reserve(N);
  try {
    for (int n = 1; n <= N; ++n) {
      const MotionState& target = tgt[n - 1];
      SlotRecord rec;
      rec.n = n;
      rec.uav = uav;
      rec.target = target;
      rec.rate = achievable_rate(uav.p, gu, beam.w, k, geom);
      rec.echo_snr = echo_snr(beam.w, uav.p, target.p, k, geom);
      const CVec a = steering_vector(uav.p, target.p, k.H, geom.mx_t, geom.my_t);
      rec.beam_gain = std::norm(a.dot(beam.w.w));
      rec.bf_status = bf_status;

      if (n >= 2) {
        const Measurement m =
            sample_measurement(uav, target, beam.w, k, geom, rng_sense);
        est = ekf_step(est, m, model, uav, beam.w, k, geom);
      }
      rec.estimate = est.s_hat;
      rec.prediction = est.s_check;

      const Vec4 e_hat = uav.vec() - est.s_hat;
      Vec2 u = Vec2::Zero();
      Vec2 next_target;
      std::string status;
      switch (controller) {
        case Controller::kIscc: {
          const std::vector<Vec4> preds = predict_states(est.s_hat, model.A, N0);
          std::vector<int> deltas(N0);
          for (int i = 0; i < N0; ++i) {
            deltas[i] = alignment_indicator(preds[i].head<2>(), gu);
          }
          const StackedModel sm =
              build_stacked(e_hat, uav.vec(), est.M_hat, model, N0, Q, R);
          params.v_uav = uav.v;
          const MpcSolution sol = solve(build_problem(sm, params, deltas), cfg.solver);
          u = sol.first_move();
          status = to_string(sol.status);
          next_target = preds[0].head<2>();
          break;
        }
        case Controller::kLqg: {
          u = lqg_control(e_hat, lqr.K[n - 1], uav.v, cfg.mpc.a_max,
                          cfg.mpc.v_max, model.dt);
          status = "lqg";
          next_target = est.s_check.head<2>();
          break;
        }
        case Controller::kNoncausal: {
          std::vector<Vec4> future(N0);
          for (int i = 0; i < N0; ++i) future[i] = tgt[n + i].vec();
          const MpcSolution sol = noncausal_mpc(future, uav.vec(), model, Q, R,
                                                cfg.mpc.a_max, cfg.mpc.v_max,
                                                cfg.solver);
          u = sol.first_move();
          status = to_string(sol.status);
          next_target = tgt[n].p;
          break;
        }
      }
      if (!u.allFinite()) {
        throw NumericalError("controller returned a non-finite input");
      }
      rec.u = u;
      rec.status = status;
      trace.slots.push_back(std::move(rec));

      uav = step_uav(uav, u, model);
      if (n < N) {
        beam = design_beam(uav.p, next_target, cfg, k, geom);
        bf_status = beam.rate_reachable ? status : "rate_unreachable";
      }
    }
  } catch (const std::exception& ex) {
    trace.aborted = true;
    trace.diagnostic = "slot " + std::to_string(trace.slots.size() + 1) + ": " +
                       ex.what();
  }
  return trace;
}

TrialMetrics compute_metrics(const std::vector<EpisodeTrace>& traces,
                             double rate_th) {
  if (traces.empty()) {
    throw std::invalid_argument("compute_metrics: no traces");
  }
  const std::size_t N = traces.front().slots.size();
  for (const auto& t : traces) {
    if (t.aborted) {
      throw std::invalid_argument("compute_metrics: aborted trace (seed " +
                                  std::to_string(t.seed) + "): " + t.diagnostic);
    }
    if (t.slots.size() != N) {
      throw std::invalid_argument("compute_metrics: traces differ in length");
    }
  }
  TrialMetrics m;
  m.trials = static_cast<int>(traces.size());
  m.rms_e.assign(N, 0.0);
  m.rmse_p.assign(N, 0.0);
  m.rmse_v.assign(N, 0.0);
  for (const auto& t : traces) {
    int ok = 0;
    for (std::size_t n = 0; n < N; ++n) {
      const SlotRecord& s = t.slots[n];
      m.rms_e[n] += s.error().squaredNorm();
      m.rmse_p[n] += (s.estimate.head<2>() - s.target.p).squaredNorm();
      m.rmse_v[n] += (s.estimate.tail<2>() - s.target.v).squaredNorm();
      if (s.rate >= rate_th - 1e-9) ++ok;
    }
    m.rate_ok_fraction.push_back(N ? static_cast<double>(ok) / N : 1.0);
  }
  const double M = static_cast<double>(m.trials);
  for (std::size_t n = 0; n < N; ++n) {
    m.rms_e[n] = std::sqrt(m.rms_e[n] / M);
    m.rmse_p[n] = std::sqrt(m.rmse_p[n] / M);
    m.rmse_v[n] = std::sqrt(m.rmse_v[n] / M);
  }
  double sum = 0.0;
  m.min_rate_ok = 1.0;
  for (double f : m.rate_ok_fraction) {
    sum += f;
    m.min_rate_ok = std::min(m.min_rate_ok, f);
  }
  m.mean_rate_ok = sum / M;
  return m;
}

std::vector<EpisodeTrace> run_trials(const ScenarioConfig& cfg,
                                     Controller controller, int trials,
                                     std::uint64_t seed_base, int threads) {
  if (trials < 1) {
    throw std::invalid_argument("run_trials: need at least one trial");
  }
  std::vector<EpisodeTrace> out(trials);
  const int workers = thread_budget(threads, trials);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int m = next++; m < trials; m = next++) {
      out[m] = run_episode(cfg, controller, seed_base + static_cast<std::uint64_t>(m));
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

TrialMetrics run_monte_carlo(const ScenarioConfig& cfg, Controller controller,
                             int trials, std::uint64_t seed_base, int threads) {
  return compute_metrics(run_trials(cfg, controller, trials, seed_base, threads),
                         cfg.rf.rate_th);
}

}  // namespace isctrack
