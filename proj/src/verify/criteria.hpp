#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "isctrack/config.hpp"
#include "isctrack/simkit.hpp"

namespace isctrack::verify {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Monte Carlo runs shared by the closed-loop checks: Case 2, both
/// initializations, all three controllers, common seeds.
struct DeskStudy {
  int trials = 0;
  int steps = 0;
  std::uint64_t seed_base = 0;
  double seconds = 0.0;
  // keyed by "<init>/<controller>", e.g. "inaccurate/iscc"
  std::map<std::string, std::vector<EpisodeTrace>> traces;
  std::map<std::string, TrialMetrics> metrics;
  std::vector<std::string> errors;
};

DeskStudy run_desk_study(int trials = 20, std::uint64_t seed_base = 1000,
                         int threads = 0);

CriterionResult check_jacobian();
CriterionResult check_fourth_moment();
CriterionResult check_beamforming();
CriterionResult check_lemma1();
CriterionResult check_lemma2();
CriterionResult check_convexity();
CriterionResult check_solver();
CriterionResult check_riccati();
CriterionResult check_rate_satisfaction(const DeskStudy& study);
CriterionResult check_tracking_order(const DeskStudy& study);
CriterionResult check_determinism();

inline constexpr int kCriterionCount = 11;

/// Criterion ids run by a named suite: jacobian, moments, beamforming,
/// lemmas, convexity, solver, riccati, closed-loop, determinism, fast
/// (everything except closed-loop) or all. Throws std::invalid_argument for
/// an unknown name.
std::vector<int> suite_criteria(const std::string& suite);

std::vector<std::string> suite_names();

/// Runs the listed criteria in order, printing one line per result to `out`
/// as each finishes (when non-null).
std::vector<CriterionResult> run_criteria(const std::vector<int>& ids,
                                          std::ostream* out);

/// "[PASS] 3 <title>: <detail> (1.23 s)"
std::string format_result(const CriterionResult& r);

}  // namespace isctrack::verify
