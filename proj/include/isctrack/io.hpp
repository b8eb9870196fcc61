#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "isctrack/simkit.hpp"

namespace isctrack {

/// Columns: n, uav_px, uav_py, uav_vx, uav_vy, tgt_px, tgt_py, tgt_vx,
/// tgt_vy, est_px, est_py, est_vx, est_vy, u_x, u_y, rate, echo_snr, status,
/// bf_status. Numbers use %.17g so identical runs give identical bytes.
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);

/// Columns: n, rms_e, rmse_p, rmse_v.
void write_metrics_csv(std::ostream& os, const TrialMetrics& m);

/// Per-trial rate satisfaction: trial, rate_ok_fraction.
void write_rate_csv(std::ostream& os, const TrialMetrics& m);

struct NamedMetrics {
  std::string name;
  TrialMetrics metrics;
};

/// One row per controller: final-slot metrics and rate satisfaction.
void write_summary_csv(std::ostream& os, const std::vector<NamedMetrics>& rows);

/// Describes one exported data file for an external plotting step.
struct PlotSeries {
  std::string figure;  // e.g. "trajectory_case2_accurate"
  std::string file;    // relative path of the CSV
  std::string x;       // column used for the horizontal axis
  std::vector<std::string> y;
  std::string x_label;
  std::string y_label;
};

/// Plain-text manifest, one block per series.
void write_manifest(std::ostream& os, const std::vector<PlotSeries>& series);

/// %.17g formatting shared by all writers.
std::string format_number(double x);

}  // namespace isctrack
