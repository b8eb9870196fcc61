#include "isctrack/io.hpp"

#include <cstdio>

namespace isctrack {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "n,uav_px,uav_py,uav_vx,uav_vy,tgt_px,tgt_py,tgt_vx,tgt_vy,"
        "est_px,est_py,est_vx,est_vy,u_x,u_y,rate,echo_snr,status,bf_status\n";
  for (const auto& s : trace.slots) {
    os << s.n;
    auto put = [&os](double v) { os << ',' << format_number(v); };
    for (int i = 0; i < 2; ++i) put(s.uav.p(i));
    for (int i = 0; i < 2; ++i) put(s.uav.v(i));
    for (int i = 0; i < 2; ++i) put(s.target.p(i));
    for (int i = 0; i < 2; ++i) put(s.target.v(i));
    for (int i = 0; i < 4; ++i) put(s.estimate(i));
    put(s.u.x());
    put(s.u.y());
    put(s.rate);
    put(s.echo_snr);
    os << ',' << s.status << ',' << s.bf_status << '\n';
  }
}

void write_metrics_csv(std::ostream& os, const TrialMetrics& m) {
  os << "n,rms_e,rmse_p,rmse_v\n";
  for (std::size_t n = 0; n < m.rms_e.size(); ++n) {
    os << n + 1 << ',' << format_number(m.rms_e[n]) << ','
       << format_number(m.rmse_p[n]) << ',' << format_number(m.rmse_v[n]) << '\n';
  }
}

void write_rate_csv(std::ostream& os, const TrialMetrics& m) {
  os << "trial,rate_ok_fraction\n";
  for (std::size_t t = 0; t < m.rate_ok_fraction.size(); ++t) {
    os << t << ',' << format_number(m.rate_ok_fraction[t]) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<NamedMetrics>& rows) {
  os << "controller,trials,final_rms_e,final_rmse_p,final_rmse_v,"
        "mean_rate_ok,min_rate_ok\n";
  for (const auto& r : rows) {
    const TrialMetrics& m = r.metrics;
    auto last = [](const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); };
    os << r.name << ',' << m.trials << ',' << format_number(last(m.rms_e)) << ','
       << format_number(last(m.rmse_p)) << ',' << format_number(last(m.rmse_v))
       << ',' << format_number(m.mean_rate_ok) << ','
       << format_number(m.min_rate_ok) << '\n';
  }
}

void write_manifest(std::ostream& os, const std::vector<PlotSeries>& series) {
  for (const auto& s : series) {
    os << "[" << s.figure << "]\n"
       << "file = " << s.file << "\n"
       << "x = " << s.x << "\n"
       << "y =";
    for (const auto& y : s.y) os << ' ' << y;
    os << "\nx_label = " << s.x_label << "\n"
       << "y_label = " << s.y_label << "\n\n";
  }
}

}  // namespace isctrack
