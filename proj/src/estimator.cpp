#include "isctrack/estimator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "isctrack/errors.hpp"

namespace isctrack {

namespace {

Mat4 symmetrize(const Mat4& M) { return 0.5 * (M + M.transpose()); }

// jpi * a .* (kx dphi + ky domega) for an mx-by-my x-major array.
CVec phase_derivative(const CVec& a, int mx, int my, double dphi,
                      double domega) {
  CVec out(a.size());
  const cdouble jpi(0.0, std::numbers::pi);
  for (int ix = 0; ix < mx; ++ix) {
    for (int iy = 0; iy < my; ++iy) {
      const int m = ix * my + iy;
      out(m) = jpi * (ix * dphi + iy * domega) * a(m);
    }
  }
  return out;
}

}  // namespace

EstimatorState initial_estimate(const Vec4& s_init, const Mat4& M_init,
                                const TransitionModel& model) {
  EstimatorState st;
  st.s_hat = s_init;
  st.M_hat = symmetrize(M_init);
  st.s_check = model.A * s_init;
  st.M_check = symmetrize(model.A * st.M_hat * model.A.transpose() + model.Qs);
  return st;
}

std::vector<Vec4> predict_states(const Vec4& s_hat, const Mat4& A,
                                 int horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("predict_states: horizon must be >= 1");
  }
  std::vector<Vec4> out;
  out.reserve(horizon);
  Vec4 s = s_hat;
  for (int i = 0; i < horizon; ++i) {
    s = A * s;
    out.push_back(s);
  }
  return out;
}

Eigen::MatrixXd measurement_jacobian(const Vec4& s_check,
                                     const MotionState& uav,
                                     const Beamformer& w, const RfConstants& k,
                                     const ArrayGeometry& geom) {
  const MotionState tgt(s_check);
  const Vec2 dp = uav.p - tgt.p;
  const Vec2 dv = uav.v - tgt.v;
  const double H2 = k.H * k.H;
  const double d2 = dp.squaredNorm() + H2;
  const double d = std::sqrt(d2);
  if (!(d > 0.0)) {
    throw DegenerateGeometryError("measurement_jacobian: zero range");
  }
  const double d3 = d2 * d;
  const int mr = geom.rx_count();

  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2 + 2 * mr, 4);

  F(0, 0) = -dp.x() / d;
  F(0, 1) = -dp.y() / d;

  // mu = -kd (dp . dv) / d with kd = 2 fc / c.
  const double kd = 2.0 * k.fc / k.c;
  const double pv = dp.dot(dv);
  F(1, 0) = kd * (dv.x() * d2 - pv * dp.x()) / d3;
  F(1, 1) = kd * (dv.y() * d2 - pv * dp.y()) / d3;
  F(1, 2) = kd * dp.x() / d;
  F(1, 3) = kd * dp.y() / d;

  // Direction-cosine sensitivities w.r.t. target position.
  const double dphi_dx = (-dp.y() * dp.y() - H2) / d3;
  const double domega_dx = dp.x() * dp.y() / d3;
  const double dphi_dy = dp.x() * dp.y() / d3;
  const double domega_dy = (-dp.x() * dp.x() - H2) / d3;

  const CVec a = steering_vector(uav.p, tgt.p, k.H, geom.mx_t, geom.my_t);
  const CVec b = steering_vector(uav.p, tgt.p, k.H, geom.mx_r, geom.my_r);
  const cdouble aw = a.dot(w.w);
  const CVec psi = b * aw;

  auto dpsi = [&](double dphi, double domega) -> CVec {
    const CVec db = phase_derivative(b, geom.mx_r, geom.my_r, dphi, domega);
    const CVec da = phase_derivative(a, geom.mx_t, geom.my_t, dphi, domega);
    return db * aw + b * da.dot(w.w);
  };

  const double scale = k.G * std::sqrt(k.beta_r);
  const double inv_d2 = 1.0 / d2;
  const double inv_d4 = inv_d2 * inv_d2;
  const CVec gx =
      scale * (dpsi(dphi_dx, domega_dx) * inv_d2 + 2.0 * dp.x() * psi * inv_d4);
  const CVec gy =
      scale * (dpsi(dphi_dy, domega_dy) * inv_d2 + 2.0 * dp.y() * psi * inv_d4);
  for (int m = 0; m < mr; ++m) {
    F(2 + m, 0) = gx(m).real();
    F(2 + m, 1) = gy(m).real();
    F(2 + mr + m, 0) = gx(m).imag();
    F(2 + mr + m, 1) = gy(m).imag();
  }
  return F;
}

Eigen::MatrixXd kalman_gain(const Mat4& M, const Eigen::MatrixXd& F,
                            const Eigen::VectorXd& qm) {
  if (qm.size() != F.rows() || !(qm.array() > 0.0).all()) {
    throw std::invalid_argument("kalman_gain: Qm must be positive, length rows(F)");
  }
  const Eigen::MatrixXd MFt = M * F.transpose();
  Eigen::MatrixXd S = F * MFt;
  S.diagonal() += qm;
  S = 0.5 * (S + S.transpose());

  // Jacobi scaling: Qm entries span many decades (range vs echo samples).
  const Eigen::VectorXd scale = S.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd Sn = scale.asDiagonal() * S * scale.asDiagonal();

  auto factor_ok = [](const Eigen::LDLT<Eigen::MatrixXd>& f) {
    return f.info() == Eigen::Success && (f.vectorD().array() > 0.0).all();
  };
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Sn);
  if (!factor_ok(ldlt)) {
    Sn.diagonal().array() += 1e-9 * Sn.trace();
    ldlt.compute(Sn);
    if (!factor_ok(ldlt)) {
      throw NumericalError("kalman_gain: innovation covariance not positive definite");
    }
  }
  // K = M F^T S^{-1} = M F^T D Sn^{-1} D
  const Eigen::MatrixXd rhs = scale.asDiagonal() * MFt.transpose();
  const Eigen::MatrixXd X = ldlt.solve(rhs);
  return (scale.asDiagonal() * X).transpose();
}

EstimatorState ekf_step(const EstimatorState& prior, const Measurement& m,
                        const TransitionModel& model, const MotionState& uav,
                        const Beamformer& w, const RfConstants& k,
                        const ArrayGeometry& geom) {
  const Eigen::MatrixXd F =
      measurement_jacobian(prior.s_check, uav, w, k, geom);
  const Eigen::MatrixXd K = kalman_gain(prior.M_check, F, m.Qm);
  const Eigen::VectorXd innovation =
      m.stacked() - measurement_mean(uav, MotionState(prior.s_check), w, k, geom);

  EstimatorState post;
  post.s_hat = prior.s_check + K * innovation;
  post.M_hat = symmetrize((Mat4::Identity() - K * F) * prior.M_check);
  post.s_check = model.A * post.s_hat;
  post.M_check =
      symmetrize(model.A * post.M_hat * model.A.transpose() + model.Qs);
  return post;
}

}  // namespace isctrack
