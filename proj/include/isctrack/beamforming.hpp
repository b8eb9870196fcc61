#pragma once

#include "isctrack/rf.hpp"

namespace isctrack {

/// Per-slot data for the sensing-/communication-centric beamforming
/// subproblems. Steering vectors must have equal norm sqrt(M_t).
struct FeasibilityInputs {
  CVec a_target;         // steering toward the predicted target
  CVec a_gu;             // steering toward the ground user
  double d_gu = 0.0;     // UAV–GU distance
  double gamma = 0.0;    // M_t P_T
  double eta = 0.0;      // sigma_c^2 (2^R_th - 1) / beta0
  double gamma_d = 0.0;  // E{d^4} Gamma_th
  int delta = 1;         // 0 iff predicted target coincides with the GU
  double rate_th = 0.0;  // bps/Hz

  int tx_count() const { return static_cast<int>(a_target.size()); }
  double power() const { return gamma / tx_count(); }
  /// eta d_c^2: beam gain toward the GU that exactly meets R_th.
  double rate_gain() const { return eta * d_gu * d_gu; }
  void validate() const;
};

/// Position tolerance (m) of the alignment test in alignment_indicator().
inline constexpr double kAlignmentTolerance = 1e-6;

/// delta = 0 when the predicted target sits on the GU (within tolerance).
int alignment_indicator(const Vec2& p_target_pred, const Vec2& p_gu,
                        double tol = kAlignmentTolerance);

FeasibilityInputs make_feasibility_inputs(const Vec2& p_uav,
                                          const Vec2& p_target_pred,
                                          const Vec2& p_gu,
                                          const RfConstants& k,
                                          const ArrayGeometry& geom,
                                          double p_t, double rate_th,
                                          double gamma_d);

/// |a_target^H a_gu| / (||a_target|| ||a_gu||), clamped to [0, 1].
double cos_theta(const FeasibilityInputs& in);

/// Maximizes |a_target^H w|^2 s.t. rate >= R_th and ||w||^2 <= P_T.
/// Throws InfeasibleError when eta d_c^2 > gamma.
Beamformer sensing_centric_w(const FeasibilityInputs& in, double p_t);

/// Optimal sensing beam gain Gamma*_{n+i} of the sensing-centric subproblem.
double gamma_star(const FeasibilityInputs& in);

/// Gamma*_{n+i} - Gamma_{d,i}; the slot passes the sensing-centric check iff
/// this is nonnegative.
double sensing_margin(const FeasibilityInputs& in);

struct CommCentricResult {
  Beamformer w;
  double gain = 0.0;  // G* = |a_gu^H w*|^2
  double rate = 0.0;  // R*
};

/// Maximizes the GU rate s.t. |a_target^H w|^2 >= gamma_d, ||w||^2 <= P_T.
/// Throws InfeasibleError when gamma_d > gamma.
CommCentricResult comm_centric_w(const FeasibilityInputs& in, double p_t);

double comm_gain_star(const FeasibilityInputs& in);

/// R*_{n+i} - R_th.
double comm_margin(const FeasibilityInputs& in);

struct FeasibilityFlags {
  bool sensing_feasible = false;
  bool comm_feasible = false;
};

/// Evaluates both feasibility checks for one slot. Margins within 1e-9 of
/// zero count as the boundary, where both flags are reported feasible.
FeasibilityFlags lemma1_check(const FeasibilityInputs& in);

/// Gamma^l = gamma - delta eta d_c^2.
double gamma_lower(const FeasibilityInputs& in);

}  // namespace isctrack
