#include "isctrack/rf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "isctrack/errors.hpp"

namespace isctrack {

void ArrayGeometry::validate() const {
  if (mx_t < 1 || my_t < 1 || mx_r < 1 || my_r < 1) {
    throw std::invalid_argument("ArrayGeometry: antenna counts must be >= 1");
  }
}

RfConstants make_rf_constants(double beta0, double fc, double rcs,
                              double sigma_c2, double sigma_r2, double G,
                              double a1, double a2, double H, double c) {
  for (double x : {beta0, fc, rcs, sigma_c2, sigma_r2, G, a1, a2, H, c}) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("make_rf_constants: all constants must be positive");
    }
  }
  RfConstants k;
  k.beta0 = beta0;
  k.fc = fc;
  k.c = c;
  k.lambda = c / fc;
  k.rcs = rcs;
  const double pi3 = std::numbers::pi * std::numbers::pi * std::numbers::pi;
  k.beta_r = k.lambda * k.lambda * rcs / (64.0 * pi3);
  k.sigma_c2 = sigma_c2;
  k.sigma_r2 = sigma_r2;
  k.G = G;
  k.a1 = a1;
  k.a2 = a2;
  k.H = H;
  return k;
}

Eigen::VectorXd Measurement::stacked() const {
  Eigen::VectorXd m(2 + rho.size());
  m(0) = d_hat;
  m(1) = mu_hat;
  m.tail(rho.size()) = rho;
  return m;
}

double distance(const Vec2& p1, const Vec2& p2, double H) {
  return std::sqrt((p1 - p2).squaredNorm() + H * H);
}

CVec steering_vector(const Vec2& p_from, const Vec2& p_to, double H, int mx,
                     int my) {
  const double d = distance(p_from, p_to, H);
  if (!(d > 0.0)) {
    throw DegenerateGeometryError("steering_vector: coincident endpoints");
  }
  const double phi = (p_from.x() - p_to.x()) / d;
  const double omega = (p_from.y() - p_to.y()) / d;
  CVec a(mx * my);
  for (int ix = 0; ix < mx; ++ix) {
    for (int iy = 0; iy < my; ++iy) {
      a(ix * my + iy) =
          std::polar(1.0, std::numbers::pi * (ix * phi + iy * omega));
    }
  }
  return a;
}

double achievable_rate(const Vec2& p_uav, const Vec2& p_gu,
                       const Beamformer& w, const RfConstants& k,
                       const ArrayGeometry& geom) {
  const double dc = distance(p_uav, p_gu, k.H);
  const CVec ac = steering_vector(p_uav, p_gu, k.H, geom.mx_t, geom.my_t);
  const double gain = std::norm(ac.dot(w.w));
  return std::log2(1.0 + k.beta0 * gain / (dc * dc * k.sigma_c2));
}

std::pair<double, double> measurement_noise_vars(const Beamformer& w,
                                                 const Vec2& p_uav,
                                                 const Vec2& p_target,
                                                 const RfConstants& k,
                                                 const ArrayGeometry& geom) {
  const double d = distance(p_uav, p_target, k.H);
  const CVec a = steering_vector(p_uav, p_target, k.H, geom.mx_t, geom.my_t);
  const double gain = std::norm(a.dot(w.w));
  if (!(gain > 0.0)) {
    throw InfeasibleError(
        "measurement_noise_vars: zero beam gain toward the target");
  }
  // |beta_n|^2 = beta_r / d^4
  const double beta_sq = k.beta_r / (d * d * d * d);
  const double denom = k.G * geom.rx_count() * beta_sq * gain;
  return {k.a1 * k.a1 * k.sigma_r2 / denom, k.a2 * k.a2 * k.sigma_r2 / denom};
}

Eigen::VectorXd measurement_mean(const MotionState& uav,
                                 const MotionState& target,
                                 const Beamformer& w, const RfConstants& k,
                                 const ArrayGeometry& geom) {
  const int mr = geom.rx_count();
  const Vec2 dp = uav.p - target.p;
  const Vec2 dv = uav.v - target.v;
  const double d = distance(uav.p, target.p, k.H);
  if (!(d > 0.0)) {
    throw DegenerateGeometryError("measurement_mean: zero range");
  }
  const CVec a = steering_vector(uav.p, target.p, k.H, geom.mx_t, geom.my_t);
  const CVec b = steering_vector(uav.p, target.p, k.H, geom.mx_r, geom.my_r);
  const cdouble scale = k.G * std::sqrt(k.beta_r) / (d * d) * a.dot(w.w);

  Eigen::VectorXd f(2 + 2 * mr);
  f(0) = d;
  f(1) = -2.0 * k.fc * dp.dot(dv) / (k.c * d);
  for (int m = 0; m < mr; ++m) {
    const cdouble r = scale * b(m);
    f(2 + m) = r.real();
    f(2 + mr + m) = r.imag();
  }
  return f;
}

Eigen::VectorXd measurement_covariance(const Beamformer& w, const Vec2& p_uav,
                                       const Vec2& p_target,
                                       const RfConstants& k,
                                       const ArrayGeometry& geom) {
  const auto [s1, s2] = measurement_noise_vars(w, p_uav, p_target, k, geom);
  const int mr = geom.rx_count();
  Eigen::VectorXd q(2 + 2 * mr);
  q(0) = s1;
  q(1) = s2;
  q.tail(2 * mr).setConstant(0.5 * k.G * k.sigma_r2);
  return q;
}

Measurement make_measurement(const MotionState& uav, const MotionState& target,
                             const Beamformer& w, const RfConstants& k,
                             const ArrayGeometry& geom,
                             const Eigen::VectorXd& z) {
  const Eigen::VectorXd f = measurement_mean(uav, target, w, k, geom);
  if (z.size() != f.size()) {
    throw std::invalid_argument("make_measurement: noise length mismatch");
  }
  Measurement m;
  m.d_hat = f(0) + z(0);
  m.mu_hat = f(1) + z(1);
  m.rho = f.tail(f.size() - 2) + z.tail(z.size() - 2);
  m.Qm = measurement_covariance(w, uav.p, target.p, k, geom);
  return m;
}

Measurement sample_measurement(const MotionState& uav,
                               const MotionState& target, const Beamformer& w,
                               const RfConstants& k, const ArrayGeometry& geom,
                               std::mt19937_64& rng) {
  const Eigen::VectorXd q =
      measurement_covariance(w, uav.p, target.p, k, geom);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    z(i) = std::sqrt(q(i)) * gauss(rng);
  }
  return make_measurement(uav, target, w, k, geom, z);
}

double echo_snr(const Beamformer& w, const Vec2& p_uav, const Vec2& p_target,
                const RfConstants& k, const ArrayGeometry& geom) {
  const double d = distance(p_uav, p_target, k.H);
  const CVec a = steering_vector(p_uav, p_target, k.H, geom.mx_t, geom.my_t);
  const double gain = std::norm(a.dot(w.w));
  return k.G * geom.rx_count() * k.beta_r * gain / (k.sigma_r2 * d * d * d * d);
}

double sensing_threshold(const RfConstants& k, const ArrayGeometry& geom,
                         double snr_th_linear) {
  return k.sigma_r2 * snr_th_linear / (k.G * geom.rx_count() * k.beta_r);
}

double rate_eta(const RfConstants& k, double rate_th) {
  return k.sigma_c2 * (std::exp2(rate_th) - 1.0) / k.beta0;
}

}  // namespace isctrack
