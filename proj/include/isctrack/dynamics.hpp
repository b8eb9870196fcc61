#pragma once

#include <random>

#include <Eigen/Core>

namespace isctrack {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

/// Horizontal kinematic state [px, py, vx, vy] of the UAV or the target.
/// Altitude is not part of the state; it enters distance computations only.
struct MotionState {
  Vec2 p = Vec2::Zero();
  Vec2 v = Vec2::Zero();

  MotionState() = default;
  MotionState(const Vec2& position, const Vec2& velocity)
      : p(position), v(velocity) {}
  explicit MotionState(const Vec4& s) : p(s.head<2>()), v(s.tail<2>()) {}

  Vec4 vec() const {
    Vec4 s;
    s << p, v;
    return s;
  }
  bool finite() const { return p.allFinite() && v.allFinite(); }
};

/// Tracking error e = s^U - s^t.
struct ErrorState {
  Vec4 e = Vec4::Zero();
};

/// Per-axis process noise variances of the constant-velocity target model.
struct ProcessNoise {
  double px = 0.0;
  double py = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// Constant-acceleration UAV / constant-velocity target transition over one
/// slot of length dt.
struct TransitionModel {
  Mat4 A = Mat4::Identity();
  Mat42 B = Mat42::Zero();
  double dt = 0.0;
  Mat4 Qs = Mat4::Zero();
};

/// Throws std::invalid_argument for dt <= 0 or a negative variance.
TransitionModel build_transition(double dt, const ProcessNoise& noise);

MotionState step_uav(const MotionState& s, const Vec2& u,
                     const TransitionModel& model);

MotionState step_target(const MotionState& s, const TransitionModel& model,
                        const Vec4& noise);

ErrorState step_error(const ErrorState& e, const Vec2& u, const Vec4& noise,
                      const TransitionModel& model);

/// Draws n_s ~ N(0, Qs) (diagonal Qs) from the given engine.
Vec4 sample_process_noise(const TransitionModel& model, std::mt19937_64& rng);

/// Position selector C = [I2 0].
Eigen::Matrix<double, 2, 4> position_selector();

}  // namespace isctrack
