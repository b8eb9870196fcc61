#include "isctrack/baselines.hpp"

#include <stdexcept>

#include <Eigen/Cholesky>

#include "isctrack/errors.hpp"

namespace isctrack {

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                             const Eigen::MatrixXd& P_next,
                             Eigen::MatrixXd* K) {
  const Eigen::MatrixXd BtP = B.transpose() * P_next;
  const Eigen::MatrixXd S = R + BtP * B;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("riccati_step: R + B^T P B not positive definite");
  }
  const Eigen::MatrixXd gain = llt.solve(BtP * A);
  Eigen::MatrixXd P = Q + A.transpose() * P_next * A -
                      A.transpose() * BtP.transpose() * gain;
  if (K != nullptr) {
    *K = gain;
  }
  return 0.5 * (P + P.transpose());
}

RiccatiSchedule riccati_backward(const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q,
                                 const Eigen::MatrixXd& R, int N) {
  if (N < 1) {
    throw std::invalid_argument("riccati_backward: N must be >= 1");
  }
  if (A.rows() != A.cols() || B.rows() != A.rows() || Q.rows() != A.rows() ||
      R.rows() != B.cols()) {
    throw std::invalid_argument("riccati_backward: inconsistent dimensions");
  }
  RiccatiSchedule s;
  s.P.resize(N);
  s.K.resize(N - 1);
  s.P[N - 1] = Q;
  for (int k = N - 1; k >= 1; --k) {
    s.P[k - 1] = riccati_step(A, B, Q, R, s.P[k], &s.K[k - 1]);
  }
  return s;
}

Vec2 lqg_control(const Vec4& e_hat, const Eigen::MatrixXd& K, const Vec2& v_uav,
                 double a_max, double v_max, double dt) {
  Vec2 u = -K * e_hat;
  const double un = u.norm();
  if (un > a_max) {
    u *= a_max / un;
  }
  const Vec2 v_next = v_uav + dt * u;
  const double vn = v_next.norm();
  if (vn > v_max) {
    u = (v_max / vn * v_next - v_uav) / dt;
  }
  return u;
}

MpcSolution noncausal_mpc(const std::vector<Vec4>& targets, const Vec4& s_uav,
                          const TransitionModel& model, const Mat4& Q,
                          const Eigen::Matrix2d& R, double a_max, double v_max,
                          const SolverOptions& opts) {
  const MpcProblem p =
      build_known_target_problem(targets, s_uav, model, Q, R, a_max, v_max);
  return solve(p, opts);
}

}  // namespace isctrack
