#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "isctrack/barrier_solver.hpp"
#include "isctrack/dynamics.hpp"

namespace isctrack {

/// Stacked error propagation over the horizon. All per-step vectors are
/// indexed 0..N0-1 for prediction step i = 1..N0.
struct StackedModel {
  int horizon = 0;
  Mat4 Q;
  Eigen::Matrix2d R;
  std::vector<Eigen::MatrixXd> Lambda;    // 4 x (4+4i): [A^i ... A I]
  std::vector<Eigen::MatrixXd> S;         // (4+4i) x 2N0
  std::vector<Eigen::VectorXd> c_bar;     // [e_hat; 0]
  std::vector<Eigen::VectorXd> c_tilde;   // [s_uav; 0]
  std::vector<Eigen::MatrixXd> N_bar;     // blkdiag(M_hat, Qs, ..., Qs)
  std::vector<Eigen::MatrixXd> Lambda_q;  // Lambda^T Q Lambda
  std::vector<Eigen::MatrixXd> Lambda_c;  // Lambda^T C^T C Lambda

  /// Mean of the stacked noise-free input, S_i u + c_bar_i (i is 1-based).
  Eigen::VectorXd u_bar(const Eigen::VectorXd& u_hat, int i) const;
  Eigen::VectorXd u_tilde(const Eigen::VectorXd& u_hat, int i) const;
};

StackedModel build_stacked(const Vec4& e_hat, const Vec4& s_uav,
                           const Mat4& M_hat, const TransitionModel& model,
                           int horizon, const Mat4& Q, const Eigen::Matrix2d& R);

/// E{e_{n+i}^T Q e_{n+i}} for 1-based i.
double expected_quadratic(const StackedModel& sm, const Eigen::VectorXd& u_hat,
                          int i);

/// E{d_{n+i}^4} (UAV-target slant range to the fourth power).
double expected_d4(const StackedModel& sm, const Eigen::VectorXd& u_hat, int i,
                   double H);

/// UAV-GU squared slant range at step n+i under u_hat.
double gu_distance_sq(const StackedModel& sm, const Eigen::VectorXd& u_hat,
                      int i, const Vec2& p_gu, double H);

struct ProblemParams {
  double gamma_th = 0.0;  // echo SNR threshold scaled to beam gain per d^4
  double eta = 0.0;
  double gamma = 0.0;     // M_t P_T
  Vec2 p_gu = Vec2::Zero();
  double H = 0.0;
  double a_max = 0.0;
  double v_max = 0.0;
  Vec2 v_uav = Vec2::Zero();
  double dt = 0.0;
};

/// Selects u_{n+i-1} from the stacked control (i is 1-based).
Eigen::MatrixXd selector_E(int i, int horizon);
Eigen::MatrixXd selector_E_sum(int i, int horizon);

struct MpcProblem {
  int horizon = 0;
  Eigen::MatrixXd Upsilon;
  Eigen::VectorXd g;
  double c_t = 0.0;
  std::vector<Eigen::MatrixXd> Xi;
  std::vector<Eigen::VectorXd> zeta;
  std::vector<double> varpi;
  /// Full sensing constraint h_i(u) <= 0, including the quartic part.
  std::vector<QuarticForm> sensing;
  double a_max = 0.0;
  double v_max = 0.0;
  Vec2 v_uav = Vec2::Zero();
  double dt = 0.0;

  int size() const { return 2 * horizon; }
  double objective(const Eigen::VectorXd& u_hat) const;
  std::vector<QuarticForm> motion_constraints() const;
  ConvexProgram program(bool with_sensing = true) const;
};

/// Coefficients of the horizon problem. deltas holds the alignment indicator
/// for each step.
MpcProblem build_problem(const StackedModel& sm, const ProblemParams& params,
                         const std::vector<int>& deltas);

/// Deterministic tracking problem with known future target states
/// (targets[i-1] = s^t[n+i]); only motion bounds are imposed.
MpcProblem build_known_target_problem(const std::vector<Vec4>& targets,
                                      const Vec4& s_uav,
                                      const TransitionModel& model,
                                      const Mat4& Q, const Eigen::Matrix2d& R,
                                      double a_max, double v_max);

enum class MpcStatus { kOptimal, kSoftFeasible, kInfeasible, kFailed };

std::string to_string(MpcStatus s);

struct MpcSolution {
  Eigen::VectorXd u_hat;
  double objective = 0.0;
  MpcStatus status = MpcStatus::kFailed;
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_history;

  Vec2 first_move() const { return u_hat.head<2>(); }
};

/// Barrier solve with phase-I start. When the sensing constraints admit no
/// strictly feasible point and soft mode is on, they are relaxed with
/// penalized slacks and the status is kSoftFeasible.
MpcSolution solve(const MpcProblem& p, const SolverOptions& opts);

}  // namespace isctrack
