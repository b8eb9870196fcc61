#include "isctrack/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace isctrack {

TransitionModel build_transition(double dt, const ProcessNoise& noise) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("build_transition: dt must be positive");
  }
  if (noise.px < 0.0 || noise.py < 0.0 || noise.vx < 0.0 || noise.vy < 0.0) {
    throw std::invalid_argument(
        "build_transition: process noise variances must be nonnegative");
  }
  TransitionModel m;
  m.dt = dt;
  m.A = Mat4::Identity();
  m.A(0, 2) = dt;
  m.A(1, 3) = dt;
  m.B.setZero();
  m.B(0, 0) = 0.5 * dt * dt;
  m.B(1, 1) = 0.5 * dt * dt;
  m.B(2, 0) = dt;
  m.B(3, 1) = dt;
  m.Qs = Vec4(noise.px, noise.py, noise.vx, noise.vy).asDiagonal();
  return m;
}

MotionState step_uav(const MotionState& s, const Vec2& u,
                     const TransitionModel& model) {
  return MotionState(Vec4(model.A * s.vec() + model.B * u));
}

MotionState step_target(const MotionState& s, const TransitionModel& model,
                        const Vec4& noise) {
  return MotionState(Vec4(model.A * s.vec() + noise));
}

ErrorState step_error(const ErrorState& e, const Vec2& u, const Vec4& noise,
                      const TransitionModel& model) {
  return ErrorState{model.A * e.e + model.B * u - noise};
}

Vec4 sample_process_noise(const TransitionModel& model, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec4 n;
  for (int k = 0; k < 4; ++k) {
    n(k) = std::sqrt(model.Qs(k, k)) * gauss(rng);
  }
  return n;
}

Eigen::Matrix<double, 2, 4> position_selector() {
  Eigen::Matrix<double, 2, 4> C = Eigen::Matrix<double, 2, 4>::Zero();
  C(0, 0) = 1.0;
  C(1, 1) = 1.0;
  return C;
}

}  // namespace isctrack
