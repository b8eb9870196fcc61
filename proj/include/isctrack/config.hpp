#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isctrack/barrier_solver.hpp"
#include "isctrack/dynamics.hpp"
#include "isctrack/rf.hpp"

namespace isctrack {

enum class InitMode { kAccurate, kInaccurate };

struct ScenarioSection {
  Vec2 uav_p0{0.0, 150.0};
  Vec2 uav_v0{0.0, 0.0};
  Vec2 target_p0{0.0, 400.0};
  Vec2 target_v0{1.5, -2.0};  // not given by the source scenario
  Vec2 gu_p{300.0, 50.0};
  double altitude = 50.0;
  int steps = 300;
  double dt = 0.2;
  InitMode init = InitMode::kAccurate;
  /// Added to Qs for the inaccurate initial MSE: diag(pos, pos, vel, vel).
  double init_extra_pos_var = 400.0;
  double init_extra_vel_var = 4.0;
};

/// Stored in linear units; dB inputs are converted once when loaded.
struct RfSection {
  int mx_t = 4;
  int my_t = 4;
  int mx_r = 4;
  int my_r = 4;
  double tx_power = 1.0;  // W
  double carrier = 30e9;  // Hz
  double mf_gain = 1e3;
  double noise_comm = 1e-11;   // W
  double noise_radar = 1e-11;  // W
  double beta0 = 1e-6;         // not given by the source scenario
  double rcs = 1.0;            // m^2, not given by the source scenario
  double a1 = 20.0;
  double a2 = 100.0;
  double snr_th = 3.1622776601683795;  // 5 dB
  double rate_th = 2.5;                // bps/Hz
};

struct DynamicsSection {
  ProcessNoise noise{4e-4, 4e-4, 0.01, 0.01};
};

struct MpcSection {
  int horizon = 5;
  Vec4 q_diag = Vec4::Ones();
  Vec2 r_diag = Vec2::Ones();
  double a_max = 10.0;  // m/s^2, not given by the source scenario
  double v_max = 30.0;  // m/s, not given by the source scenario
};

struct ScenarioConfig {
  ScenarioSection scenario;
  RfSection rf;
  DynamicsSection dynamics;
  MpcSection mpc;
  SolverOptions solver;

  TransitionModel transition() const;
  RfConstants rf_constants() const;
  ArrayGeometry geometry() const;
  /// Gamma_th derived from the echo SNR threshold.
  double gamma_th() const;
  double eta() const;
  /// M_t P_T.
  double gamma() const;
  Mat4 Q() const;
  Eigen::Matrix2d R() const;
  /// Initial estimate MSE for the configured init mode.
  Mat4 initial_mse() const;
  double horizon_seconds() const { return scenario.steps * scenario.dt; }

  /// Throws std::invalid_argument on an out-of-range value.
  void validate() const;
};

/// Default values, optionally with a named preset ("case1" | "case2" |
/// "case3") applied.
ScenarioConfig default_config(const std::string& preset = "");

/// Layering: defaults, then preset, then the file (if path non-empty), then
/// overrides of the form "section.key=value" or "key=value" for a key that
/// is unique across sections. Unknown keys, parse errors and range
/// violations throw ConfigError.
ScenarioConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides = {},
                           const std::string& preset = "");

/// Parses a document held in memory; same layering as load_config().
ScenarioConfig parse_config(const std::string& text,
                            const std::vector<std::string>& overrides = {},
                            const std::string& preset = "");

/// Linear-unit YAML that reloads to an identical configuration.
std::string dump_config(const ScenarioConfig& cfg);

std::string to_string(InitMode m);

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace isctrack
