#include "isctrack/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isctrack/errors.hpp"

namespace isctrack {

namespace {

constexpr double kBoundaryBand = 1e-9;

cdouble unit_phase(cdouble z) {
  const double r = std::abs(z);
  return r > 0.0 ? z / r : cdouble(1.0, 0.0);
}

// Two-direction construction shared by both closed forms: put exactly
// `anchor_gain` of beam gain on `anchor` and the remaining power on the
// component of `target` orthogonal to it, phase-aligned with `target`.
CVec split_beam(const CVec& anchor, const CVec& target, double anchor_gain,
                double p_t) {
  const double m = static_cast<double>(anchor.size());
  const CVec nu1 = anchor / anchor.norm();
  const cdouble proj = nu1.dot(target);
  CVec residual = target - proj * nu1;
  const double rnorm = residual.norm();
  const double p1 = std::min(anchor_gain / m, p_t);
  const cdouble k1 = std::sqrt(p1) * unit_phase(proj);
  if (rnorm <= 1e-12 * target.norm()) {
    // target is parallel to anchor; the full-power anchor beam serves both.
    return std::sqrt(p_t) * unit_phase(proj) * nu1;
  }
  const CVec nu2 = residual / rnorm;
  const cdouble k2 = std::sqrt(std::max(p_t - p1, 0.0)) * unit_phase(nu2.dot(target));
  return k1 * nu1 + k2 * nu2;
}

double two_branch_gain(double gamma, double cos_t, double fixed_gain) {
  if (gamma * cos_t * cos_t >= fixed_gain) {
    return gamma;
  }
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double g = std::sqrt(fixed_gain) * cos_t +
                   std::sqrt(std::max(gamma - fixed_gain, 0.0)) * sin_t;
  return g * g;
}

}  // namespace

void FeasibilityInputs::validate() const {
  if (a_target.size() == 0 || a_target.size() != a_gu.size()) {
    throw std::invalid_argument("FeasibilityInputs: steering vector sizes differ");
  }
  if (!(gamma > 0.0) || !(eta > 0.0) || d_gu < 0.0 || gamma_d < 0.0) {
    throw std::invalid_argument("FeasibilityInputs: gamma, eta must be positive");
  }
  if (delta != 0 && delta != 1) {
    throw std::invalid_argument("FeasibilityInputs: delta must be 0 or 1");
  }
}

int alignment_indicator(const Vec2& p_target_pred, const Vec2& p_gu,
                        double tol) {
  return (p_target_pred - p_gu).norm() <= tol ? 0 : 1;
}

FeasibilityInputs make_feasibility_inputs(const Vec2& p_uav,
                                          const Vec2& p_target_pred,
                                          const Vec2& p_gu,
                                          const RfConstants& k,
                                          const ArrayGeometry& geom,
                                          double p_t, double rate_th,
                                          double gamma_d) {
  FeasibilityInputs in;
  in.a_target = steering_vector(p_uav, p_target_pred, k.H, geom.mx_t, geom.my_t);
  in.a_gu = steering_vector(p_uav, p_gu, k.H, geom.mx_t, geom.my_t);
  in.d_gu = distance(p_uav, p_gu, k.H);
  in.gamma = geom.tx_count() * p_t;
  in.eta = rate_eta(k, rate_th);
  in.gamma_d = gamma_d;
  in.delta = alignment_indicator(p_target_pred, p_gu);
  in.rate_th = rate_th;
  return in;
}

double cos_theta(const FeasibilityInputs& in) {
  const double c =
      std::abs(in.a_target.dot(in.a_gu)) / (in.a_target.norm() * in.a_gu.norm());
  return std::clamp(c, 0.0, 1.0);
}

Beamformer sensing_centric_w(const FeasibilityInputs& in, double p_t) {
  in.validate();
  const double need = in.rate_gain();
  if (need > in.gamma) {
    throw InfeasibleError("sensing_centric_w: rate threshold unreachable at full power");
  }
  const double c = cos_theta(in);
  if (in.gamma * c * c >= need) {
    return Beamformer{std::sqrt(p_t) * in.a_target / in.a_target.norm()};
  }
  return Beamformer{split_beam(in.a_gu, in.a_target, need, p_t)};
}

double gamma_star(const FeasibilityInputs& in) {
  in.validate();
  const double need = in.rate_gain();
  if (need > in.gamma) {
    throw InfeasibleError("gamma_star: rate threshold unreachable at full power");
  }
  return two_branch_gain(in.gamma, cos_theta(in), need);
}

double sensing_margin(const FeasibilityInputs& in) {
  return gamma_star(in) - in.gamma_d;
}

CommCentricResult comm_centric_w(const FeasibilityInputs& in, double p_t) {
  in.validate();
  if (in.gamma_d > in.gamma) {
    throw InfeasibleError("comm_centric_w: sensing threshold unreachable at full power");
  }
  const double c = cos_theta(in);
  CommCentricResult r;
  if (in.gamma * c * c >= in.gamma_d) {
    r.w = Beamformer{std::sqrt(p_t) * in.a_gu / in.a_gu.norm()};
  } else {
    r.w = Beamformer{split_beam(in.a_target, in.a_gu, in.gamma_d, p_t)};
  }
  r.gain = comm_gain_star(in);
  const double snr_unit = (std::exp2(in.rate_th) - 1.0) / in.rate_gain();
  r.rate = std::log2(1.0 + snr_unit * r.gain);
  return r;
}

double comm_gain_star(const FeasibilityInputs& in) {
  in.validate();
  if (in.gamma_d > in.gamma) {
    throw InfeasibleError("comm_gain_star: sensing threshold unreachable at full power");
  }
  return two_branch_gain(in.gamma, cos_theta(in), in.gamma_d);
}

double comm_margin(const FeasibilityInputs& in) {
  // beta0 / sigma_c^2 = (2^R_th - 1) / eta
  const double snr_unit = (std::exp2(in.rate_th) - 1.0) / in.eta;
  const double dc2 = in.d_gu * in.d_gu;
  return std::log2(1.0 + snr_unit * comm_gain_star(in) / dc2) - in.rate_th;
}

FeasibilityFlags lemma1_check(const FeasibilityInputs& in) {
  in.validate();
  FeasibilityFlags f;
  bool boundary = false;
  if (in.rate_gain() <= in.gamma) {
    const double m = sensing_margin(in);
    boundary |= std::abs(m) < kBoundaryBand * std::max(1.0, in.gamma);
    f.sensing_feasible = m >= 0.0;
  }
  if (in.gamma_d <= in.gamma) {
    const double m = comm_margin(in);
    boundary |= std::abs(m) < kBoundaryBand;
    f.comm_feasible = m >= 0.0;
  }
  if (boundary) {
    f.sensing_feasible = f.comm_feasible = true;
  }
  return f;
}

double gamma_lower(const FeasibilityInputs& in) {
  return in.gamma - in.delta * in.rate_gain();
}

}  // namespace isctrack
