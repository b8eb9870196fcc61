#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace isctrack {

/// f(x) = alpha q(x)^2 + x^T X x + 2 z^T x + w, with
/// q(x) = x^T P x + 2 b^T x + c. Convex whenever alpha >= 0, X, P are PSD
/// and q >= 0 everywhere.
struct QuarticForm {
  double alpha = 0.0;
  Eigen::MatrixXd P;
  Eigen::VectorXd b;
  double c = 0.0;
  Eigen::MatrixXd X;
  Eigen::VectorXd z;
  double w = 0.0;

  /// Pure quadratic form (alpha = 0).
  static QuarticForm quadratic(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& z, double w);

  double q(const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  Eigen::Index size() const { return X.rows(); }
};

/// minimize x^T P0 x + 2 q0^T x + r0  s.t.  f_j(x) <= 0.
struct ConvexProgram {
  Eigen::MatrixXd P0;
  Eigen::VectorXd q0;
  double r0 = 0.0;
  std::vector<QuarticForm> constraints;

  Eigen::Index size() const { return P0.rows(); }
  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const;
  double max_violation(const Eigen::VectorXd& x) const;
};

struct SolverOptions {
  int max_newton_iterations = 2000;  // across all centering steps
  double newton_tol = 1e-9;          // lambda^2 / 2
  double t0 = 1.0;
  double mu = 10.0;
  double gap_tol = 1e-12;  // stop once m / t falls below this (objective scaled to ~1)
  double armijo = 0.01;
  double backtrack = 0.5;
  bool soft_mode = true;
  double soft_penalty = 1e4;
};

enum class BarrierStatus { kConverged, kInfeasibleStart, kIterationLimit, kStalled };

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  BarrierStatus status = BarrierStatus::kIterationLimit;
  int newton_iterations = 0;
  double kkt_residual = 0.0;
  /// Objective after each centering step.
  std::vector<double> objective_history;
};

/// Log-barrier path following with damped Newton centering from a strictly
/// feasible x0.
BarrierResult barrier_minimize(const ConvexProgram& prog,
                               const Eigen::VectorXd& x0,
                               const SolverOptions& opts);

struct PhaseOneResult {
  bool feasible = false;
  Eigen::VectorXd x;
  double max_violation = 0.0;
  int newton_iterations = 0;
};

/// Searches for a strictly feasible point by minimizing s subject to
/// f_j(x) <= s, starting at x0.
PhaseOneResult find_strictly_feasible(const ConvexProgram& prog,
                                      const Eigen::VectorXd& x0,
                                      const SolverOptions& opts);

/// Relative stationarity + duality-gap measure used for reporting. The
/// multipliers are the barrier estimates 1 / (t (-f_j)) corrected by one
/// Newton step of the barrier problem at x, clipped at zero.
double kkt_residual(const ConvexProgram& prog, const Eigen::VectorXd& x,
                    double t);

std::string to_string(BarrierStatus s);

}  // namespace isctrack
