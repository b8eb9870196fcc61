#pragma once

// Reference computations used to cross-check the library. Each one takes a
// different route to the same quantity (finite differences, sampling,
// iterative maximization, plain recursions) and shares no code paths with
// the routine it checks beyond the noiseless measurement model.

#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "isctrack/barrier_solver.hpp"
#include "isctrack/dynamics.hpp"
#include "isctrack/rf.hpp"

namespace isctrack::verify {

/// Central differences of measurement_mean() with respect to the target
/// state, step h on every coordinate.
Eigen::MatrixXd fd_jacobian(const Vec4& s_target, const MotionState& uav,
                            const Beamformer& w, const RfConstants& k,
                            const ArrayGeometry& geom, double h);

/// Largest row-wise relative deviation max_r |A_r - B_r|_inf / |B_r|_inf,
/// skipping rows of B that are identically zero.
double rowwise_relative_error(const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B);

/// Mean and covariance of e_{n+i} by stepping e <- A e + B u_k forward with
/// Cov <- A Cov A^T + Qs, starting from (e_hat, M_hat).
std::pair<Vec4, Mat4> recursive_moments(const Vec4& e_hat, const Mat4& M_hat,
                                        const TransitionModel& model,
                                        const Eigen::VectorXd& u_hat, int i);

struct SampleMean {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sampled E{d^4} with d^2 = |C e_{n+i}|^2 + H^2, drawing the initial error
/// from N(e_hat, M_hat) and the process noise step by step.
SampleMean sampled_d4(const Vec4& e_hat, const Mat4& M_hat,
                      const TransitionModel& model,
                      const Eigen::VectorXd& u_hat, int i, double H,
                      long samples, std::mt19937_64& rng);

/// Sampled E{e_{n+i}^T Q e_{n+i}}.
SampleMean sampled_quadratic(const Vec4& e_hat, const Mat4& M_hat,
                             const TransitionModel& model,
                             const Eigen::VectorXd& u_hat, int i,
                             const Mat4& Q, long samples, std::mt19937_64& rng);

struct GainMaximum {
  double value = 0.0;
  CVec w;
  int iterations = 0;
};

/// Projected gradient ascent for max |a_obj^H w|^2 subject to
/// |a_con^H w|^2 >= need and |w|^2 <= p_t. The feasible set only depends on
/// the component of w along a_con and the norm of the rest, so the
/// projection reduces to a 2-D projection onto a disk cut by a half-plane.
/// Several starts are run and the best is returned. Requires
/// need <= |a_con|^2 p_t.
GainMaximum projected_gradient_gain(const CVec& a_obj, const CVec& a_con,
                                    double need, double p_t,
                                    std::mt19937_64& rng);

/// Steering vector built from an explicit element loop over (x, y) with the
/// element index ix * my + iy.
CVec naive_steering_vector(const Vec2& p_from, const Vec2& p_to, double H,
                           int mx, int my);

/// Information-form Kalman update of the linearized measurement
/// y ~ f0 + F (s - s_prior) + N(0, diag(qm)).
std::pair<Vec4, Mat4> information_form_update(const Vec4& s_prior,
                                              const Mat4& M_prior,
                                              const Eigen::MatrixXd& F,
                                              const Eigen::VectorXd& qm,
                                              const Eigen::VectorXd& innovation);

/// Fixed-point iteration of p <- q + a^2 p - (a b p)^2 / (r + b^2 p).
double scalar_dare_fixed_point(double a, double b, double q, double r,
                               double tol = 1e-15, int max_iter = 100000);

/// Deterministic closed loop e_{k+1} = A e_k + B u_k with u_k = -K_k e_k for
/// k = 1..N-1; returns sum u^T R u + sum_{k=2..N} e_k^T Q e_k.
double closed_loop_lqr_cost(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const std::vector<Eigen::MatrixXd>& K,
                            const Eigen::VectorXd& e1);

struct GridResult {
  bool found = false;
  Vec2 u = Vec2::Zero();
  double objective = 0.0;
};

/// Grid search for a program in two variables over [-half, half]^2. Every
/// grid line (step apart, in both axis directions) is intersected with the
/// feasible set exactly: quadratic constraints by their roots, quartic ones
/// by bisection around the line minimum. The quadratic objective is then
/// minimized in closed form on each feasible segment.
GridResult line_grid_search(const ConvexProgram& prog, double half, double step);

/// Lawson-Hanson nonnegative least squares: min |A x - b| s.t. x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// KKT measure with multipliers chosen by NNLS over all constraints:
/// max(|grad f0 + sum l_j grad f_j|_inf / (1 + |grad f0|_inf),
///     max_j l_j |f_j| / (1 + |f0|)).
/// The complementarity term enters the least-squares fit with matching
/// weights, so inactive constraints only help if their slack is tiny.
double nnls_kkt_residual(const ConvexProgram& prog, const Eigen::VectorXd& x);

}  // namespace isctrack::verify
