#pragma once

#include <complex>
#include <random>
#include <utility>

#include <Eigen/Core>

#include "isctrack/dynamics.hpp"

namespace isctrack {

using cdouble = std::complex<double>;
using CVec = Eigen::VectorXcd;

/// Uniform planar arrays with half-wavelength spacing on both axes.
struct ArrayGeometry {
  int mx_t = 4;
  int my_t = 4;
  int mx_r = 4;
  int my_r = 4;

  int tx_count() const { return mx_t * my_t; }
  int rx_count() const { return mx_r * my_r; }
  void validate() const;
};

/// Linear-unit RF constants. Build with make_rf_constants() so the derived
/// wavelength and reflection coefficient stay consistent.
struct RfConstants {
  double beta0 = 0.0;     // channel power at 1 m
  double fc = 0.0;        // Hz
  double c = 0.0;         // m/s
  double lambda = 0.0;    // m
  double rcs = 0.0;       // m^2
  double beta_r = 0.0;    // lambda^2 rcs / (64 pi^3)
  double sigma_c2 = 0.0;  // W
  double sigma_r2 = 0.0;  // W
  double G = 0.0;         // matched-filter gain
  double a1 = 0.0;
  double a2 = 0.0;
  double H = 0.0;         // UAV altitude, m
};

inline constexpr double kSpeedOfLight = 299792458.0;

RfConstants make_rf_constants(double beta0, double fc, double rcs,
                              double sigma_c2, double sigma_r2, double G,
                              double a1, double a2, double H,
                              double c = kSpeedOfLight);

struct Beamformer {
  CVec w;

  double power() const { return w.squaredNorm(); }
};

/// Range, Doppler and real-valued echo, plus the diagonal of Qm.
struct Measurement {
  double d_hat = 0.0;
  double mu_hat = 0.0;
  Eigen::VectorXd rho;
  Eigen::VectorXd Qm;  // diag([s1^2, s2^2, (G sigma_r^2 / 2) 1_{2Mr}])

  Eigen::VectorXd stacked() const;
};

double distance(const Vec2& p1, const Vec2& p2, double H);

/// Kronecker (x-major) steering vector of an mx-by-my UPA at p_from looking
/// toward p_to. Entry mx*my_count + my = exp(j pi (mx Phi + my Omega)).
/// Throws DegenerateGeometryError when the 3-D distance is zero.
CVec steering_vector(const Vec2& p_from, const Vec2& p_to, double H, int mx,
                     int my);

/// Rate in bps/Hz toward a ground user over the LoS channel.
double achievable_rate(const Vec2& p_uav, const Vec2& p_gu,
                       const Beamformer& w, const RfConstants& k,
                       const ArrayGeometry& geom);

/// (sigma_1^2, sigma_2^2) for range and Doppler. Throws InfeasibleError when
/// the beam gain toward the target is zero.
std::pair<double, double> measurement_noise_vars(const Beamformer& w,
                                                 const Vec2& p_uav,
                                                 const Vec2& p_target,
                                                 const RfConstants& k,
                                                 const ArrayGeometry& geom);

/// Noiseless measurement f(s^t) for the given UAV state and beamformer.
Eigen::VectorXd measurement_mean(const MotionState& uav,
                                 const MotionState& target,
                                 const Beamformer& w, const RfConstants& k,
                                 const ArrayGeometry& geom);

/// Diagonal of Qm evaluated at the given geometry.
Eigen::VectorXd measurement_covariance(const Beamformer& w, const Vec2& p_uav,
                                       const Vec2& p_target,
                                       const RfConstants& k,
                                       const ArrayGeometry& geom);

/// f(s^t) + z with z supplied explicitly (z has length 2 + 2 M_r).
Measurement make_measurement(const MotionState& uav, const MotionState& target,
                             const Beamformer& w, const RfConstants& k,
                             const ArrayGeometry& geom,
                             const Eigen::VectorXd& z);

/// f(s^t) + z with z ~ N(0, Qm) drawn from rng.
Measurement sample_measurement(const MotionState& uav,
                               const MotionState& target, const Beamformer& w,
                               const RfConstants& k, const ArrayGeometry& geom,
                               std::mt19937_64& rng);

/// Post-matched-filter echo SNR G M_r beta_r |a^H w|^2 / (sigma_r^2 d^4).
double echo_snr(const Beamformer& w, const Vec2& p_uav, const Vec2& p_target,
                const RfConstants& k, const ArrayGeometry& geom);

/// Gamma_th = sigma_r^2 SNR_th / (G M_r beta_r).
double sensing_threshold(const RfConstants& k, const ArrayGeometry& geom,
                         double snr_th_linear);

/// eta = sigma_c^2 (2^R_th - 1) / beta0.
double rate_eta(const RfConstants& k, double rate_th);

}  // namespace isctrack
