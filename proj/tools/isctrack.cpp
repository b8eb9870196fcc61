#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "isctrack/config.hpp"
#include "isctrack/io.hpp"
#include "isctrack/simkit.hpp"
#include "verify/criteria.hpp"

namespace fs = std::filesystem;
using namespace isctrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  std::string preset = "case2";
  std::string init;
};

void add_config_options(CLI::App* app, ConfigArgs& a, bool with_preset) {
  app->add_option("--config", a.path, "YAML configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("--set", a.overrides, "Override, e.g. rf.rate_th=3.0 (repeatable)");
  if (with_preset) {
    app->add_option("--preset", a.preset, "Scenario preset")
        ->check(CLI::IsMember({"case1", "case2", "case3"}));
  }
  app->add_option("--init", a.init, "Initial estimate quality")
      ->check(CLI::IsMember({"accurate", "inaccurate"}));
}

ScenarioConfig load(const ConfigArgs& a, const std::string& preset) {
  std::vector<std::string> ov = a.overrides;
  if (!a.init.empty()) ov.push_back("scenario.init=" + a.init);
  return load_config(a.path, ov, preset);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os = open_out(p);
  os << text;
}

std::vector<Controller> parse_controllers(const std::string& list) {
  std::vector<Controller> out;
  std::stringstream ss(list);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(parse_controller(item));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (out.empty()) throw UsageError("no controllers given");
  return out;
}

int cmd_simulate(const ConfigArgs& ca, const std::string& controller,
                 std::uint64_t seed, const fs::path& out) {
  const ScenarioConfig cfg = load(ca, ca.preset);
  const Controller c = parse_controller(controller);
  const EpisodeTrace trace = run_episode(cfg, c, seed);
  fs::create_directories(out);
  const fs::path file =
      out / ("trace_" + ca.preset + "_" + to_string(c) + "_seed" + std::to_string(seed) + ".csv");
  {
    std::ofstream os = open_out(file);
    write_trace_csv(os, trace);
  }
  write_text(out / "config.yaml", dump_config(cfg));
  std::cout << file.string() << ": " << trace.slots.size() << " slots\n";
  if (trace.aborted) {
    std::cerr << "episode aborted: " << trace.diagnostic << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_montecarlo(const ConfigArgs& ca, const std::string& controllers, int trials,
                   std::uint64_t seed_base, int threads, const fs::path& out) {
  const ScenarioConfig cfg = load(ca, ca.preset);
  const std::vector<Controller> cs = parse_controllers(controllers);
  fs::create_directories(out);
  std::vector<NamedMetrics> rows;
  for (Controller c : cs) {
    const TrialMetrics m = run_monte_carlo(cfg, c, trials, seed_base, threads);
    {
      std::ofstream os = open_out(out / ("metrics_" + to_string(c) + ".csv"));
      write_metrics_csv(os, m);
    }
    {
      std::ofstream os = open_out(out / ("rate_" + to_string(c) + ".csv"));
      write_rate_csv(os, m);
    }
    rows.push_back({to_string(c), m});
  }
  {
    std::ofstream os = open_out(out / "summary.csv");
    write_summary_csv(os, rows);
  }
  write_text(out / "config.yaml", dump_config(cfg));
  write_summary_csv(std::cout, rows);
  return kExitOk;
}

int cmd_verify(const std::string& suite) {
  const std::vector<int> ids = verify::suite_criteria(suite);
  const auto results = verify::run_criteria(ids, &std::cout);
  int passed = 0;
  for (const auto& r : results) passed += r.passed ? 1 : 0;
  std::cout << passed << "/" << results.size() << " criteria passed\n";
  return passed == static_cast<int>(results.size()) ? kExitOk : kExitVerify;
}

// Columns n followed by one column per named series.
void write_columns(const fs::path& p, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& cols) {
  std::ofstream os = open_out(p);
  os << "n";
  for (const auto& nm : names) os << "," << nm;
  os << "\n";
  const std::size_t rows = cols.empty() ? 0 : cols.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    os << r + 1;
    for (const auto& c : cols) os << "," << format_number(c[r]);
    os << "\n";
  }
}

void write_by_trial(const fs::path& p, const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& cols) {
  std::ofstream os = open_out(p);
  os << "trial";
  for (const auto& nm : names) os << "," << nm;
  os << "\n";
  const std::size_t rows = cols.empty() ? 0 : cols.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    os << r;
    for (const auto& c : cols) os << "," << format_number(c[r]);
    os << "\n";
  }
}

const std::vector<Controller> kAll = {Controller::kIscc, Controller::kLqg,
                                      Controller::kNoncausal};

// Trajectory and estimation-error files for one representative episode.
void export_instance(const ScenarioConfig& cfg, const std::string& tag,
                     std::uint64_t seed, const fs::path& out,
                     std::vector<PlotSeries>& manifest) {
  std::vector<std::string> traj_names;
  std::vector<std::vector<double>> traj;
  std::vector<std::string> err_names;
  std::vector<std::vector<double>> err;
  for (Controller c : kAll) {
    const EpisodeTrace t = run_episode(cfg, c, seed);
    if (t.aborted) throw std::runtime_error(to_string(c) + ": " + t.diagnostic);
    std::vector<double> x, y, tx, ty, e;
    for (const auto& s : t.slots) {
      x.push_back(s.uav.p.x());
      y.push_back(s.uav.p.y());
      tx.push_back(s.target.p.x());
      ty.push_back(s.target.p.y());
      e.push_back((s.estimate.head<2>() - s.target.p).norm());
    }
    if (traj.empty()) {
      traj_names = {"target_px", "target_py"};
      traj = {tx, ty};
    }
    traj_names.push_back(to_string(c) + "_px");
    traj_names.push_back(to_string(c) + "_py");
    traj.push_back(x);
    traj.push_back(y);
    // The non-causal controller sees the true future and runs no estimator.
    if (c != Controller::kNoncausal) {
      err_names.push_back(to_string(c));
      err.push_back(e);
    }
  }
  const std::string tf = "trajectories_" + tag + ".csv";
  const std::string ef = "estimation_error_" + tag + ".csv";
  write_columns(out / tf, traj_names, traj);
  write_columns(out / ef, err_names, err);
  for (std::size_t i = 0; i < traj_names.size(); i += 2) {
    manifest.push_back({"trajectories_" + tag, tf, traj_names[i], {traj_names[i + 1]},
                        "x [m]", "y [m]"});
  }
  manifest.push_back({"estimation_error_" + tag, ef, "n", err_names, "slot n",
                      "position estimation error [m]"});
}

int cmd_export_plots(const ConfigArgs& ca, int trials, std::uint64_t seed,
                     int threads, const fs::path& out) {
  fs::create_directories(out);
  std::vector<PlotSeries> manifest;

  ConfigArgs accurate = ca;
  accurate.init = "accurate";
  ConfigArgs inaccurate = ca;
  inaccurate.init = "inaccurate";
  for (const std::string preset : {"case1", "case2", "case3"}) {
    export_instance(load(accurate, preset), "accurate_" + preset, seed, out, manifest);
  }
  export_instance(load(inaccurate, "case2"), "inaccurate_case2", seed, out, manifest);

  std::vector<std::string> names;
  std::vector<std::vector<double>> rms, rp, rv, rate;
  for (const ConfigArgs* a : {&accurate, &inaccurate}) {
    const ScenarioConfig cfg = load(*a, "case2");
    for (Controller c : kAll) {
      const TrialMetrics m = run_monte_carlo(cfg, c, trials, seed, threads);
      names.push_back(to_string(c) + "_" + a->init);
      rms.push_back(m.rms_e);
      rp.push_back(m.rmse_p);
      rv.push_back(m.rmse_v);
      rate.push_back(m.rate_ok_fraction);
    }
  }
  write_columns(out / "rms_error_case2.csv", names, rms);
  write_columns(out / "rmse_position_case2.csv", names, rp);
  write_columns(out / "rmse_velocity_case2.csv", names, rv);
  write_by_trial(out / "rate_satisfaction_case2.csv", names, rate);
  manifest.push_back({"rms_error_case2", "rms_error_case2.csv", "n", names, "slot n",
                      "RMS tracking error [m]"});
  manifest.push_back({"rmse_position_case2", "rmse_position_case2.csv", "n", names,
                      "slot n", "position RMSE [m]"});
  manifest.push_back({"rmse_velocity_case2", "rmse_velocity_case2.csv", "n", names,
                      "slot n", "velocity RMSE [m/s]"});
  manifest.push_back({"rate_satisfaction_case2", "rate_satisfaction_case2.csv", "trial",
                      names, "trial", "fraction of slots meeting the rate threshold"});
  {
    std::ofstream os = open_out(out / "manifest.txt");
    write_manifest(os, manifest);
  }
  std::cout << "wrote " << manifest.size() << " series to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV target tracking with joint sensing, communication and control"};
  app.require_subcommand(1);

  ConfigArgs ca;
  fs::path out = "out";
  std::string controller = "iscc";
  std::string controllers = "iscc,lqg,noncausal";
  std::uint64_t seed = 1;
  std::uint64_t seed_base = 1000;
  int trials = 20;
  int threads = 0;
  std::string suite = "fast";

  CLI::App* sim = app.add_subcommand("simulate", "Run one episode and write its trace CSV");
  add_config_options(sim, ca, true);
  sim->add_option("--controller", controller, "iscc | lqg | noncausal")
      ->check(CLI::IsMember({"iscc", "lqg", "noncausal"}));
  sim->add_option("--seed", seed, "Episode seed");
  sim->add_option("--out", out, "Output directory");

  CLI::App* mc = app.add_subcommand("montecarlo", "Monte Carlo metrics per controller");
  add_config_options(mc, ca, true);
  mc->add_option("--controllers", controllers, "Comma-separated controller list");
  mc->add_option("--trials", trials, "Number of trials")->check(CLI::PositiveNumber);
  mc->add_option("--seed", seed_base, "Seed of trial 0; trial m uses seed + m");
  mc->add_option("--threads", threads, "Worker threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  mc->add_option("--out", out, "Output directory");

  CLI::App* ver = app.add_subcommand("verify", "Run the property and oracle checks");
  const std::vector<std::string> suites = verify::suite_names();
  ver->add_option("--suite", suite, "Check suite")->check(CLI::IsMember(suites));

  CLI::App* plots = app.add_subcommand("export-plots", "Write plot data files and a manifest");
  add_config_options(plots, ca, false);
  plots->add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  plots->add_option("--seed", seed_base, "Episode seed and Monte Carlo seed base");
  plots->add_option("--threads", threads, "Worker threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  plots->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(ca, controller, seed, out);
    if (mc->parsed()) return cmd_montecarlo(ca, controllers, trials, seed_base, threads, out);
    if (ver->parsed()) return cmd_verify(suite);
    if (plots->parsed()) return cmd_export_plots(ca, trials, seed_base, threads, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
