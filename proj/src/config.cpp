#include "isctrack/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace isctrack {

namespace {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string key_name(const std::string& section, const std::string& key) {
  return section + "." + key;
}

double as_double(const YAML::Node& n, const std::string& name) {
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: " + name + " must be a number");
  }
}

int as_int(const YAML::Node& n, const std::string& name) {
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: " + name + " must be an integer");
  }
}

bool as_bool(const YAML::Node& n, const std::string& name) {
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: " + name + " must be true or false");
  }
}

template <int N>
Eigen::Matrix<double, N, 1> as_vec(const YAML::Node& n, const std::string& name) {
  if (!n.IsSequence() || n.size() != static_cast<std::size_t>(N)) {
    throw ConfigError("config: " + name + " must be a list of " +
                      std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    v(i) = as_double(n[i], name);
  }
  return v;
}

using Setter = std::function<void(ScenarioConfig&, const YAML::Node&,
                                  const std::string&)>;

struct Entry {
  std::string section;
  std::string key;
  Setter set;
};

#define ISC_NUM(sec, k, field) \
  {sec, k, [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) { field = as_double(n, nm); }}
#define ISC_INT(sec, k, field) \
  {sec, k, [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) { field = as_int(n, nm); }}
#define ISC_VEC2(sec, k, field) \
  {sec, k, [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) { field = as_vec<2>(n, nm); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      ISC_VEC2("scenario", "uav_p0", c.scenario.uav_p0),
      ISC_VEC2("scenario", "uav_v0", c.scenario.uav_v0),
      ISC_VEC2("scenario", "target_p0", c.scenario.target_p0),
      ISC_VEC2("scenario", "target_v0", c.scenario.target_v0),
      ISC_VEC2("scenario", "gu_p", c.scenario.gu_p),
      ISC_NUM("scenario", "altitude", c.scenario.altitude),
      ISC_INT("scenario", "steps", c.scenario.steps),
      ISC_NUM("scenario", "dt", c.scenario.dt),
      {"scenario", "init",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         const std::string s = n.IsScalar() ? n.Scalar() : "";
         if (s == "accurate") {
           c.scenario.init = InitMode::kAccurate;
         } else if (s == "inaccurate") {
           c.scenario.init = InitMode::kInaccurate;
         } else {
           throw ConfigError("config: " + nm + " must be accurate or inaccurate");
         }
       }},
      ISC_NUM("scenario", "init_extra_pos_var", c.scenario.init_extra_pos_var),
      ISC_NUM("scenario", "init_extra_vel_var", c.scenario.init_extra_vel_var),

      ISC_INT("rf", "mx_t", c.rf.mx_t),
      ISC_INT("rf", "my_t", c.rf.my_t),
      ISC_INT("rf", "mx_r", c.rf.mx_r),
      ISC_INT("rf", "my_r", c.rf.my_r),
      ISC_NUM("rf", "tx_power_w", c.rf.tx_power),
      {"rf", "tx_power_dbm",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.rf.tx_power = dbm_to_watt(as_double(n, nm));
       }},
      ISC_NUM("rf", "carrier_hz", c.rf.carrier),
      ISC_NUM("rf", "mf_gain", c.rf.mf_gain),
      ISC_NUM("rf", "noise_comm_w", c.rf.noise_comm),
      {"rf", "noise_comm_dbm",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.rf.noise_comm = dbm_to_watt(as_double(n, nm));
       }},
      ISC_NUM("rf", "noise_radar_w", c.rf.noise_radar),
      {"rf", "noise_radar_dbm",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.rf.noise_radar = dbm_to_watt(as_double(n, nm));
       }},
      ISC_NUM("rf", "beta0", c.rf.beta0),
      {"rf", "beta0_db",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.rf.beta0 = db_to_linear(as_double(n, nm));
       }},
      ISC_NUM("rf", "rcs", c.rf.rcs),
      ISC_NUM("rf", "a1", c.rf.a1),
      ISC_NUM("rf", "a2", c.rf.a2),
      ISC_NUM("rf", "snr_th", c.rf.snr_th),
      {"rf", "snr_th_db",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.rf.snr_th = db_to_linear(as_double(n, nm));
       }},
      ISC_NUM("rf", "rate_th", c.rf.rate_th),

      ISC_NUM("dynamics", "var_px", c.dynamics.noise.px),
      ISC_NUM("dynamics", "var_py", c.dynamics.noise.py),
      ISC_NUM("dynamics", "var_vx", c.dynamics.noise.vx),
      ISC_NUM("dynamics", "var_vy", c.dynamics.noise.vy),

      ISC_INT("mpc", "horizon", c.mpc.horizon),
      {"mpc", "q_diag",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.mpc.q_diag = as_vec<4>(n, nm);
       }},
      ISC_VEC2("mpc", "r_diag", c.mpc.r_diag),
      ISC_NUM("mpc", "a_max", c.mpc.a_max),
      ISC_NUM("mpc", "v_max", c.mpc.v_max),

      ISC_INT("solver", "max_newton_iterations", c.solver.max_newton_iterations),
      ISC_NUM("solver", "newton_tol", c.solver.newton_tol),
      ISC_NUM("solver", "t0", c.solver.t0),
      ISC_NUM("solver", "mu", c.solver.mu),
      ISC_NUM("solver", "gap_tol", c.solver.gap_tol),
      ISC_NUM("solver", "armijo", c.solver.armijo),
      ISC_NUM("solver", "backtrack", c.solver.backtrack),
      {"solver", "soft_mode",
       [](ScenarioConfig& c, const YAML::Node& n, const std::string& nm) {
         c.solver.soft_mode = as_bool(n, nm);
       }},
      ISC_NUM("solver", "soft_penalty", c.solver.soft_penalty),
  };
  return table;
}

#undef ISC_NUM
#undef ISC_INT
#undef ISC_VEC2

const Entry* find_entry(const std::string& section, const std::string& key) {
  for (const auto& e : entries()) {
    if (e.section == section && e.key == key) {
      return &e;
    }
  }
  return nullptr;
}

void apply_document(ScenarioConfig& cfg, const YAML::Node& root) {
  if (!root || root.IsNull()) {
    return;
  }
  if (!root.IsMap()) {
    throw ConfigError("config: top level must be a mapping of sections");
  }
  for (const auto& sec : root) {
    const std::string section = sec.first.as<std::string>();
    if (sec.second.IsNull()) {
      continue;
    }
    if (!sec.second.IsMap()) {
      throw ConfigError("config: section '" + section + "' must be a mapping");
    }
    for (const auto& kv : sec.second) {
      const std::string key = kv.first.as<std::string>();
      const Entry* e = find_entry(section, key);
      if (e == nullptr) {
        throw ConfigError("config: unknown key '" + key_name(section, key) + "'");
      }
      e->set(cfg, kv.second, key_name(section, key));
    }
  }
}

void apply_override(ScenarioConfig& cfg, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("config: override '" + text + "' is not key=value");
  }
  const std::string lhs = text.substr(0, eq);
  const std::string rhs = text.substr(eq + 1);
  const Entry* e = nullptr;
  const auto dot = lhs.find('.');
  if (dot != std::string::npos) {
    e = find_entry(lhs.substr(0, dot), lhs.substr(dot + 1));
  } else {
    for (const auto& cand : entries()) {
      if (cand.key == lhs) {
        if (e != nullptr) {
          throw ConfigError("config: key '" + lhs + "' is ambiguous; use section.key");
        }
        e = &cand;
      }
    }
  }
  if (e == nullptr) {
    throw ConfigError("config: unknown key '" + lhs + "'");
  }
  YAML::Node value;
  try {
    value = YAML::Load(rhs);
  } catch (const YAML::Exception& ex) {
    throw ConfigError("config: cannot parse value for '" + lhs + "': " + ex.what());
  }
  e->set(cfg, value, key_name(e->section, e->key));
}

ScenarioConfig layered(const YAML::Node& doc,
                       const std::vector<std::string>& overrides,
                       const std::string& preset) {
  ScenarioConfig cfg = default_config(preset);
  apply_document(cfg, doc);
  for (const auto& o : overrides) {
    apply_override(cfg, o);
  }
  cfg.validate();
  return cfg;
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename V>
std::string list(const V& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s += (i ? ", " : "") + num(v(i));
  }
  return s + "]";
}

}  // namespace

TransitionModel ScenarioConfig::transition() const {
  return build_transition(scenario.dt, dynamics.noise);
}

RfConstants ScenarioConfig::rf_constants() const {
  return make_rf_constants(rf.beta0, rf.carrier, rf.rcs, rf.noise_comm,
                           rf.noise_radar, rf.mf_gain, rf.a1, rf.a2,
                           scenario.altitude);
}

ArrayGeometry ScenarioConfig::geometry() const {
  return ArrayGeometry{rf.mx_t, rf.my_t, rf.mx_r, rf.my_r};
}

double ScenarioConfig::gamma_th() const {
  return sensing_threshold(rf_constants(), geometry(), rf.snr_th);
}

double ScenarioConfig::eta() const { return rate_eta(rf_constants(), rf.rate_th); }

double ScenarioConfig::gamma() const {
  return geometry().tx_count() * rf.tx_power;
}

Mat4 ScenarioConfig::Q() const { return mpc.q_diag.asDiagonal(); }

Eigen::Matrix2d ScenarioConfig::R() const { return mpc.r_diag.asDiagonal(); }

Mat4 ScenarioConfig::initial_mse() const {
  Mat4 M = transition().Qs;
  if (scenario.init == InitMode::kInaccurate) {
    M(0, 0) += scenario.init_extra_pos_var;
    M(1, 1) += scenario.init_extra_pos_var;
    M(2, 2) += scenario.init_extra_vel_var;
    M(3, 3) += scenario.init_extra_vel_var;
  }
  return M;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) {
      throw ConfigError("config: " + what);
    }
  };
  const auto finite2 = [](const Vec2& v) { return v.allFinite(); };
  require(finite2(scenario.uav_p0) && finite2(scenario.uav_v0) &&
              finite2(scenario.target_p0) && finite2(scenario.target_v0) &&
              finite2(scenario.gu_p),
          "scenario positions and velocities must be finite");
  require(scenario.altitude >= 0.0, "scenario.altitude must be >= 0");
  require(scenario.steps >= 1, "scenario.steps must be >= 1");
  require(scenario.dt > 0.0, "scenario.dt must be > 0");
  require(scenario.init_extra_pos_var >= 0.0 && scenario.init_extra_vel_var >= 0.0,
          "scenario.init_extra_*_var must be >= 0");
  require(rf.mx_t >= 1 && rf.my_t >= 1 && rf.mx_r >= 1 && rf.my_r >= 1,
          "rf antenna counts must be >= 1");
  require(rf.tx_power > 0.0 && rf.carrier > 0.0 && rf.mf_gain > 0.0 &&
              rf.noise_comm > 0.0 && rf.noise_radar > 0.0 && rf.beta0 > 0.0 &&
              rf.rcs > 0.0 && rf.a1 > 0.0 && rf.a2 > 0.0 && rf.snr_th > 0.0,
          "rf powers, gains and constants must be > 0");
  require(rf.rate_th >= 0.0, "rf.rate_th must be >= 0");
  require(dynamics.noise.px >= 0.0 && dynamics.noise.py >= 0.0 &&
              dynamics.noise.vx >= 0.0 && dynamics.noise.vy >= 0.0,
          "dynamics variances must be >= 0");
  require(mpc.horizon >= 1, "mpc.horizon must be >= 1");
  require((mpc.q_diag.array() >= 0.0).all(), "mpc.q_diag must be >= 0");
  require((mpc.r_diag.array() > 0.0).all(), "mpc.r_diag must be > 0");
  require(mpc.a_max > 0.0 && mpc.v_max > 0.0, "mpc.a_max and mpc.v_max must be > 0");
  require(scenario.uav_v0.norm() <= mpc.v_max, "|scenario.uav_v0| exceeds mpc.v_max");
  require(solver.max_newton_iterations >= 1, "solver.max_newton_iterations must be >= 1");
  require(solver.newton_tol > 0.0 && solver.t0 > 0.0 && solver.mu > 1.0 &&
              solver.gap_tol > 0.0,
          "solver tolerances must be > 0 and mu > 1");
  require(solver.armijo > 0.0 && solver.armijo < 0.5, "solver.armijo must be in (0, 0.5)");
  require(solver.backtrack > 0.0 && solver.backtrack < 1.0,
          "solver.backtrack must be in (0, 1)");
  require(solver.soft_penalty > 0.0, "solver.soft_penalty must be > 0");
}

ScenarioConfig default_config(const std::string& preset) {
  ScenarioConfig cfg;
  if (preset.empty()) {
    return cfg;
  }
  if (preset == "case1") {
    cfg.scenario.uav_p0 = Vec2(0.0, 100.0);
  } else if (preset == "case2") {
    cfg.scenario.uav_p0 = Vec2(0.0, 150.0);
  } else if (preset == "case3") {
    cfg.scenario.uav_p0 = Vec2(0.0, 200.0);
  } else {
    throw ConfigError("config: unknown preset '" + preset + "'");
  }
  return cfg;
}

ScenarioConfig parse_config(const std::string& text,
                            const std::vector<std::string>& overrides,
                            const std::string& preset) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& ex) {
    throw ConfigError(std::string("config: parse error: ") + ex.what());
  }
  return layered(doc, overrides, preset);
}

ScenarioConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides,
                           const std::string& preset) {
  if (path.empty()) {
    return layered(YAML::Node(), overrides, preset);
  }
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, preset);
}

std::string to_string(InitMode m) {
  return m == InitMode::kAccurate ? "accurate" : "inaccurate";
}

std::string dump_config(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "scenario:\n"
    << "  uav_p0: " << list(c.scenario.uav_p0) << "\n"
    << "  uav_v0: " << list(c.scenario.uav_v0) << "\n"
    << "  target_p0: " << list(c.scenario.target_p0) << "\n"
    << "  target_v0: " << list(c.scenario.target_v0) << "\n"
    << "  gu_p: " << list(c.scenario.gu_p) << "\n"
    << "  altitude: " << num(c.scenario.altitude) << "\n"
    << "  steps: " << c.scenario.steps << "\n"
    << "  dt: " << num(c.scenario.dt) << "\n"
    << "  init: " << to_string(c.scenario.init) << "\n"
    << "  init_extra_pos_var: " << num(c.scenario.init_extra_pos_var) << "\n"
    << "  init_extra_vel_var: " << num(c.scenario.init_extra_vel_var) << "\n"
    << "rf:\n"
    << "  mx_t: " << c.rf.mx_t << "\n"
    << "  my_t: " << c.rf.my_t << "\n"
    << "  mx_r: " << c.rf.mx_r << "\n"
    << "  my_r: " << c.rf.my_r << "\n"
    << "  tx_power_w: " << num(c.rf.tx_power) << "\n"
    << "  carrier_hz: " << num(c.rf.carrier) << "\n"
    << "  mf_gain: " << num(c.rf.mf_gain) << "\n"
    << "  noise_comm_w: " << num(c.rf.noise_comm) << "\n"
    << "  noise_radar_w: " << num(c.rf.noise_radar) << "\n"
    << "  beta0: " << num(c.rf.beta0) << "\n"
    << "  rcs: " << num(c.rf.rcs) << "\n"
    << "  a1: " << num(c.rf.a1) << "\n"
    << "  a2: " << num(c.rf.a2) << "\n"
    << "  snr_th: " << num(c.rf.snr_th) << "\n"
    << "  rate_th: " << num(c.rf.rate_th) << "\n"
    << "dynamics:\n"
    << "  var_px: " << num(c.dynamics.noise.px) << "\n"
    << "  var_py: " << num(c.dynamics.noise.py) << "\n"
    << "  var_vx: " << num(c.dynamics.noise.vx) << "\n"
    << "  var_vy: " << num(c.dynamics.noise.vy) << "\n"
    << "mpc:\n"
    << "  horizon: " << c.mpc.horizon << "\n"
    << "  q_diag: " << list(c.mpc.q_diag) << "\n"
    << "  r_diag: " << list(c.mpc.r_diag) << "\n"
    << "  a_max: " << num(c.mpc.a_max) << "\n"
    << "  v_max: " << num(c.mpc.v_max) << "\n"
    << "solver:\n"
    << "  max_newton_iterations: " << c.solver.max_newton_iterations << "\n"
    << "  newton_tol: " << num(c.solver.newton_tol) << "\n"
    << "  t0: " << num(c.solver.t0) << "\n"
    << "  mu: " << num(c.solver.mu) << "\n"
    << "  gap_tol: " << num(c.solver.gap_tol) << "\n"
    << "  armijo: " << num(c.solver.armijo) << "\n"
    << "  backtrack: " << num(c.solver.backtrack) << "\n"
    << "  soft_mode: " << (c.solver.soft_mode ? "true" : "false") << "\n"
    << "  soft_penalty: " << num(c.solver.soft_penalty) << "\n";
  return o.str();
}

}  // namespace isctrack
