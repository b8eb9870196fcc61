#pragma once

#include <vector>

#include <Eigen/Core>

#include "isctrack/dynamics.hpp"
#include "isctrack/rf.hpp"

namespace isctrack {

/// Posterior (s_hat, M_hat) for the current slot and the one-step prior
/// (s_check, M_check) for the next one.
struct EstimatorState {
  Vec4 s_hat = Vec4::Zero();
  Mat4 M_hat = Mat4::Zero();
  Vec4 s_check = Vec4::Zero();
  Mat4 M_check = Mat4::Zero();
};

/// Seeds the filter from an external estimate and computes the first prior.
EstimatorState initial_estimate(const Vec4& s_init, const Mat4& M_init,
                                const TransitionModel& model);

/// Entry i-1 holds A^i s_hat for i = 1..horizon.
std::vector<Vec4> predict_states(const Vec4& s_hat, const Mat4& A,
                                 int horizon);

/// d f / d s^t evaluated at target state s_check; (2 + 2 M_r) x 4.
Eigen::MatrixXd measurement_jacobian(const Vec4& s_check,
                                     const MotionState& uav,
                                     const Beamformer& w, const RfConstants& k,
                                     const ArrayGeometry& geom);

/// One EKF measurement update on prior.{s_check, M_check} using m.Qm as
/// the measurement covariance, followed by the time update for the next
/// slot. Throws NumericalError if the innovation covariance cannot be
/// factored even after one jitter retry.
EstimatorState ekf_step(const EstimatorState& prior, const Measurement& m,
                        const TransitionModel& model, const MotionState& uav,
                        const Beamformer& w, const RfConstants& k,
                        const ArrayGeometry& geom);

/// Kalman gain M F^T (F M F^T + diag(qm))^{-1} via a Jacobi-scaled LDL^T.
Eigen::MatrixXd kalman_gain(const Mat4& M, const Eigen::MatrixXd& F,
                            const Eigen::VectorXd& qm);

}  // namespace isctrack
