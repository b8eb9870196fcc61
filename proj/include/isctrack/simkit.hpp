#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isctrack/config.hpp"
#include "isctrack/dynamics.hpp"

namespace isctrack {

enum class Controller { kIscc, kLqg, kNoncausal };

std::string to_string(Controller c);
/// Accepts "iscc", "lqg", "noncausal"; throws std::invalid_argument otherwise.
Controller parse_controller(const std::string& name);

struct SlotRecord {
  int n = 0;  // 1-based slot index
  MotionState uav;
  MotionState target;
  Vec4 estimate = Vec4::Zero();    // posterior s_hat[n]
  Vec4 prediction = Vec4::Zero();  // one-step prediction s_check[n+1]
  Vec2 u = Vec2::Zero();
  double beam_gain = 0.0;  // |a^H w_n|^2 toward the true target
  double rate = 0.0;       // GU rate under w_n
  double echo_snr = 0.0;   // linear
  std::string status;      // controller status for the move u_n
  std::string bf_status;   // status of the solve that designed w_n

  Vec4 error() const { return uav.vec() - target.vec(); }
};

struct EpisodeTrace {
  Controller controller = Controller::kIscc;
  std::uint64_t seed = 0;
  std::vector<SlotRecord> slots;
  bool aborted = false;
  std::string diagnostic;

  double control_energy() const;
};

/// Closed-loop run: EKF update (n >= 2), prediction, control, beamformer for
/// the next slot, then the physics step. The target trajectory depends only
/// on the seed, so controllers sharing a seed see the same target.
EpisodeTrace run_episode(const ScenarioConfig& cfg, Controller controller,
                         std::uint64_t seed);

struct TrialMetrics {
  int trials = 0;
  std::vector<double> rms_e;   // per slot
  std::vector<double> rmse_p;  // per slot
  std::vector<double> rmse_v;  // per slot
  std::vector<double> rate_ok_fraction;  // per trial
  double mean_rate_ok = 0.0;
  double min_rate_ok = 0.0;
};

/// Aggregates equal-length traces. A slot counts as rate-satisfied when
/// rate >= rate_th - 1e-9. Throws std::invalid_argument on empty input,
/// unequal lengths or aborted traces.
TrialMetrics compute_metrics(const std::vector<EpisodeTrace>& traces,
                             double rate_th);

/// Runs trials with seeds seed_base + m on up to `threads` workers (0 means
/// the hardware concurrency, capped by ISCTRACK_THREADS when set).
std::vector<EpisodeTrace> run_trials(const ScenarioConfig& cfg,
                                     Controller controller, int trials,
                                     std::uint64_t seed_base, int threads = 0);

TrialMetrics run_monte_carlo(const ScenarioConfig& cfg, Controller controller,
                             int trials, std::uint64_t seed_base,
                             int threads = 0);

}  // namespace isctrack
