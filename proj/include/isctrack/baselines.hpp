#pragma once

#include <vector>

#include <Eigen/Core>

#include "isctrack/dynamics.hpp"
#include "isctrack/mpc.hpp"

namespace isctrack {

/// Finite-horizon Riccati solution. P[k-1] holds P_k (k = 1..N, P_N = Q) and
/// K[k-1] holds K_k (k = 1..N-1).
struct RiccatiSchedule {
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::MatrixXd> K;

  int horizon() const { return static_cast<int>(P.size()); }
};

/// Backward recursion from the terminal condition P_N = Q. Sizes are generic
/// so scalar systems can be checked directly.
RiccatiSchedule riccati_backward(const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q,
                                 const Eigen::MatrixXd& R, int N);

/// One step of the recursion: returns P_k given P_{k+1}; the gain K_k is
/// written to *K when non-null.
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                             const Eigen::MatrixXd& P_next,
                             Eigen::MatrixXd* K = nullptr);

/// u = -K e_hat, clipped to a_max, then the predicted velocity is projected
/// onto the speed ball. The second step may undo the clip; it is not redone.
Vec2 lqg_control(const Vec4& e_hat, const Eigen::MatrixXd& K, const Vec2& v_uav,
                 double a_max, double v_max, double dt);

/// Clairvoyant MPC over known future target states (targets[i-1] = s^t[n+i]),
/// motion bounds only.
MpcSolution noncausal_mpc(const std::vector<Vec4>& targets, const Vec4& s_uav,
                          const TransitionModel& model, const Mat4& Q,
                          const Eigen::Matrix2d& R, double a_max, double v_max,
                          const SolverOptions& opts);

}  // namespace isctrack
