#include "isctrack/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isctrack {

namespace {

constexpr double kKktTolerance = 1e-6;

Eigen::MatrixXd pad_matrix(const Eigen::MatrixXd& M, Eigen::Index n) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  out.topLeftCorner(M.rows(), M.cols()) = M;
  return out;
}

Eigen::VectorXd pad_vector(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  out.head(v.size()) = v;
  return out;
}

QuarticForm pad_form(const QuarticForm& f, Eigen::Index n) {
  QuarticForm h = f;
  h.P = pad_matrix(f.P, n);
  h.b = pad_vector(f.b, n);
  h.X = pad_matrix(f.X, n);
  h.z = pad_vector(f.z, n);
  return h;
}

void check_step(const StackedModel& sm, int i) {
  if (i < 1 || i > sm.horizon) {
    throw std::out_of_range("stacked model: step index out of range");
  }
}

}  // namespace

Eigen::VectorXd StackedModel::u_bar(const Eigen::VectorXd& u_hat, int i) const {
  check_step(*this, i);
  return S[i - 1] * u_hat + c_bar[i - 1];
}

Eigen::VectorXd StackedModel::u_tilde(const Eigen::VectorXd& u_hat,
                                      int i) const {
  check_step(*this, i);
  return S[i - 1] * u_hat + c_tilde[i - 1];
}

StackedModel build_stacked(const Vec4& e_hat, const Vec4& s_uav,
                           const Mat4& M_hat, const TransitionModel& model,
                           int horizon, const Mat4& Q,
                           const Eigen::Matrix2d& R) {
  if (horizon < 1) {
    throw std::invalid_argument("build_stacked: horizon must be >= 1");
  }
  StackedModel sm;
  sm.horizon = horizon;
  sm.Q = Q;
  sm.R = R;
  const Eigen::Matrix<double, 2, 4> C = position_selector();
  const Eigen::Matrix4d CtC = C.transpose() * C;

  for (int i = 1; i <= horizon; ++i) {
    const int cols = 4 + 4 * i;
    Eigen::MatrixXd L(4, cols);
    Mat4 Ap = Mat4::Identity();
    for (int j = i; j >= 0; --j) {
      L.block<4, 4>(0, 4 * j) = Ap;
      Ap = model.A * Ap;
    }
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(cols, 2 * horizon);
    for (int j = 0; j < i; ++j) {
      S.block<4, 2>(4 + 4 * j, 2 * j) = model.B;
    }
    Eigen::VectorXd cb = Eigen::VectorXd::Zero(cols);
    cb.head<4>() = e_hat;
    Eigen::VectorXd ct = Eigen::VectorXd::Zero(cols);
    ct.head<4>() = s_uav;
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(cols, cols);
    N.topLeftCorner<4, 4>() = 0.5 * (M_hat + M_hat.transpose());
    for (int j = 0; j < i; ++j) {
      N.block<4, 4>(4 + 4 * j, 4 + 4 * j) = model.Qs;
    }
    sm.Lambda.push_back(L);
    sm.S.push_back(std::move(S));
    sm.c_bar.push_back(std::move(cb));
    sm.c_tilde.push_back(std::move(ct));
    sm.N_bar.push_back(std::move(N));
    sm.Lambda_q.push_back(L.transpose() * Q * L);
    sm.Lambda_c.push_back(L.transpose() * CtC * L);
  }
  return sm;
}

double expected_quadratic(const StackedModel& sm, const Eigen::VectorXd& u_hat,
                          int i) {
  const Eigen::VectorXd ub = sm.u_bar(u_hat, i);
  const Eigen::MatrixXd& Lq = sm.Lambda_q[i - 1];
  return ub.dot(Lq * ub) + (sm.N_bar[i - 1] * Lq).trace();
}

double expected_d4(const StackedModel& sm, const Eigen::VectorXd& u_hat, int i,
                   double H) {
  const Eigen::VectorXd ub = sm.u_bar(u_hat, i);
  const Eigen::MatrixXd& Lc = sm.Lambda_c[i - 1];
  const Eigen::MatrixXd LN = Lc * sm.N_bar[i - 1];
  const Eigen::VectorXd Lu = Lc * ub;
  const double quad = ub.dot(Lu);
  const double tr = LN.trace();
  const double H2 = H * H;
  return quad * quad + 4.0 * Lu.dot(sm.N_bar[i - 1] * Lu) + 2.0 * quad * tr +
         tr * tr + 2.0 * (LN * LN).trace() + 2.0 * H2 * (quad + tr) + H2 * H2;
}

double gu_distance_sq(const StackedModel& sm, const Eigen::VectorXd& u_hat,
                      int i, const Vec2& p_gu, double H) {
  const Eigen::VectorXd ut = sm.u_tilde(u_hat, i);
  const Vec2 p = position_selector() * (sm.Lambda[i - 1] * ut);
  return (p - p_gu).squaredNorm() + H * H;
}

Eigen::MatrixXd selector_E(int i, int horizon) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2, 2 * horizon);
  E.block<2, 2>(0, 2 * (i - 1)).setIdentity();
  return E;
}

Eigen::MatrixXd selector_E_sum(int i, int horizon) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2, 2 * horizon);
  for (int j = 1; j <= i; ++j) {
    E.block<2, 2>(0, 2 * (j - 1)).setIdentity();
  }
  return E;
}

double MpcProblem::objective(const Eigen::VectorXd& u_hat) const {
  return u_hat.dot(Upsilon * u_hat) + 2.0 * g.dot(u_hat) + c_t;
}

std::vector<QuarticForm> MpcProblem::motion_constraints() const {
  std::vector<QuarticForm> out;
  const Eigen::Index n = size();
  for (int i = 1; i <= horizon; ++i) {
    const Eigen::MatrixXd E = selector_E(i, horizon);
    out.push_back(QuarticForm::quadratic(E.transpose() * E,
                                         Eigen::VectorXd::Zero(n),
                                         -a_max * a_max));
  }
  for (int i = 1; i <= horizon; ++i) {
    const Eigen::MatrixXd Es = selector_E_sum(i, horizon);
    out.push_back(QuarticForm::quadratic(dt * dt * Es.transpose() * Es,
                                         dt * Es.transpose() * v_uav,
                                         v_uav.squaredNorm() - v_max * v_max));
  }
  return out;
}

ConvexProgram MpcProblem::program(bool with_sensing) const {
  ConvexProgram prog;
  prog.P0 = Upsilon;
  prog.q0 = g;
  prog.r0 = c_t;
  prog.constraints = motion_constraints();
  if (with_sensing) {
    prog.constraints.insert(prog.constraints.end(), sensing.begin(),
                            sensing.end());
  }
  return prog;
}

MpcProblem build_problem(const StackedModel& sm, const ProblemParams& params,
                         const std::vector<int>& deltas) {
  const int N0 = sm.horizon;
  if (static_cast<int>(deltas.size()) != N0) {
    throw std::invalid_argument("build_problem: one delta per horizon step");
  }
  const Eigen::Index n = 2 * N0;
  MpcProblem p;
  p.horizon = N0;
  p.a_max = params.a_max;
  p.v_max = params.v_max;
  p.v_uav = params.v_uav;
  p.dt = params.dt;
  p.Upsilon = Eigen::MatrixXd::Zero(n, n);
  p.g = Eigen::VectorXd::Zero(n);
  p.c_t = 0.0;

  const Eigen::Matrix<double, 2, 4> C = position_selector();
  const double gth = params.gamma_th;
  const double H2 = params.H * params.H;

  for (int i = 0; i < N0; ++i) {
    const Eigen::MatrixXd& S = sm.S[i];
    const Eigen::MatrixXd& Lq = sm.Lambda_q[i];
    const Eigen::MatrixXd& Lc = sm.Lambda_c[i];
    const Eigen::MatrixXd& N = sm.N_bar[i];
    const Eigen::VectorXd& cb = sm.c_bar[i];
    const Eigen::VectorXd& ct = sm.c_tilde[i];

    p.Upsilon += S.transpose() * Lq * S;
    p.g += S.transpose() * Lq * cb;
    p.c_t += cb.dot(Lq * cb) + (N * Lq).trace();

    const Eigen::MatrixXd LcN = Lc * N;
    const Eigen::MatrixXd LNL = LcN * Lc;
    const double tr = LcN.trace();
    const double de = deltas[i] * params.eta;
    const Eigen::MatrixXd StLc = S.transpose() * Lc;
    const Eigen::VectorXd LtCtp = sm.Lambda[i].transpose() * C.transpose() * params.p_gu;
    const double cLc = cb.dot(Lc * cb);

    Eigen::MatrixXd Xi = de * StLc * S + 4.0 * gth * S.transpose() * LNL * S +
                         2.0 * gth * (H2 + tr) * StLc * S;
    Xi = 0.5 * (Xi + Xi.transpose());
    const Eigen::VectorXd zeta = de * S.transpose() * (Lc * ct - LtCtp) +
                                 4.0 * gth * S.transpose() * (LNL * cb) +
                                 2.0 * gth * (H2 + tr) * StLc * cb;
    const double varpi =
        gth * (4.0 * cb.dot(LNL * cb) + 2.0 * cLc * tr + tr * tr +
               2.0 * (LcN * LcN).trace() + 2.0 * H2 * (cLc + tr) + H2 * H2) +
        de * (ct.dot(Lc * ct) - 2.0 * ct.dot(LtCtp) + params.p_gu.squaredNorm() +
              H2) -
        params.gamma;

    QuarticForm h;
    h.alpha = gth;
    h.P = StLc * S;
    h.P = 0.5 * (h.P + h.P.transpose());
    h.b = StLc * cb;
    h.c = cLc;
    h.X = Xi;
    h.z = zeta;
    h.w = varpi;

    p.Xi.push_back(Xi);
    p.zeta.push_back(zeta);
    p.varpi.push_back(varpi);
    p.sensing.push_back(std::move(h));
  }
  for (int i = 0; i < N0; ++i) {
    p.Upsilon.block<2, 2>(2 * i, 2 * i) += sm.R;
  }
  p.Upsilon = 0.5 * (p.Upsilon + p.Upsilon.transpose());
  return p;
}

MpcProblem build_known_target_problem(const std::vector<Vec4>& targets,
                                      const Vec4& s_uav,
                                      const TransitionModel& model,
                                      const Mat4& Q, const Eigen::Matrix2d& R,
                                      double a_max, double v_max) {
  const int N0 = static_cast<int>(targets.size());
  if (N0 < 1) {
    throw std::invalid_argument("build_known_target_problem: empty horizon");
  }
  const StackedModel sm =
      build_stacked(Vec4::Zero(), s_uav, Mat4::Zero(), model, N0, Q, R);
  const Eigen::Index n = 2 * N0;
  MpcProblem p;
  p.horizon = N0;
  p.a_max = a_max;
  p.v_max = v_max;
  p.v_uav = s_uav.tail<2>();
  p.dt = model.dt;
  p.Upsilon = Eigen::MatrixXd::Zero(n, n);
  p.g = Eigen::VectorXd::Zero(n);
  Mat4 Ai = Mat4::Identity();
  for (int i = 0; i < N0; ++i) {
    Ai = model.A * Ai;
    // e_{n+i} = G u + c
    const Eigen::MatrixXd G = sm.Lambda[i] * sm.S[i];
    const Vec4 c = Ai * s_uav - targets[i];
    p.Upsilon += G.transpose() * Q * G;
    p.g += G.transpose() * Q * c;
    p.c_t += c.dot(Q * c);
    p.Upsilon.block<2, 2>(2 * i, 2 * i) += R;
  }
  p.Upsilon = 0.5 * (p.Upsilon + p.Upsilon.transpose());
  return p;
}

std::string to_string(MpcStatus s) {
  switch (s) {
    case MpcStatus::kOptimal:
      return "optimal";
    case MpcStatus::kSoftFeasible:
      return "soft_feasible";
    case MpcStatus::kInfeasible:
      return "infeasible";
    case MpcStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

MpcSolution solve(const MpcProblem& p, const SolverOptions& opts) {
  const Eigen::Index n = p.size();
  MpcSolution out;
  out.u_hat = Eigen::VectorXd::Zero(n);

  const ConvexProgram full = p.program(true);
  const PhaseOneResult ph = find_strictly_feasible(full, out.u_hat, opts);
  out.iterations += ph.newton_iterations;

  if (ph.feasible) {
    const BarrierResult r = barrier_minimize(full, ph.x, opts);
    out.iterations += r.newton_iterations;
    out.u_hat = r.x;
    out.objective = p.objective(r.x);
    out.kkt_residual = r.kkt_residual;
    out.objective_history = r.objective_history;
    out.status = (r.status == BarrierStatus::kConverged &&
                  r.kkt_residual < kKktTolerance)
                     ? MpcStatus::kOptimal
                     : MpcStatus::kFailed;
    return out;
  }

  // Motion bounds alone must admit a strictly feasible point.
  const ConvexProgram motion = p.program(false);
  const PhaseOneResult pm =
      find_strictly_feasible(motion, Eigen::VectorXd::Zero(n), opts);
  out.iterations += pm.newton_iterations;
  out.u_hat = pm.x;
  out.objective = p.objective(pm.x);
  if (!opts.soft_mode || !pm.feasible) {
    out.status = MpcStatus::kInfeasible;
    return out;
  }

  // Soft mode: h_i(u) <= sigma_i, sigma_i >= 0, penalty rho * sum(sigma).
  const Eigen::Index ns = static_cast<Eigen::Index>(p.sensing.size());
  const Eigen::Index nt = n + ns;
  ConvexProgram soft;
  soft.P0 = pad_matrix(p.Upsilon, nt);
  soft.q0 = pad_vector(p.g, nt);
  soft.q0.tail(ns).setConstant(0.5 * opts.soft_penalty);
  soft.r0 = p.c_t;
  for (const auto& f : motion.constraints) {
    soft.constraints.push_back(pad_form(f, nt));
  }
  Eigen::VectorXd y0(nt);
  y0.head(n) = pm.x;
  for (Eigen::Index k = 0; k < ns; ++k) {
    QuarticForm h = pad_form(p.sensing[k], nt);
    h.z(n + k) = -0.5;
    soft.constraints.push_back(std::move(h));
    Eigen::VectorXd z = Eigen::VectorXd::Zero(nt);
    z(n + k) = -0.5;
    soft.constraints.push_back(
        QuarticForm::quadratic(Eigen::MatrixXd::Zero(nt, nt), z, 0.0));
    y0(n + k) = std::max(p.sensing[k].value(pm.x), 0.0) + 1.0;
  }

  const BarrierResult r = barrier_minimize(soft, y0, opts);
  out.iterations += r.newton_iterations;
  out.u_hat = r.x.head(n);
  out.objective = p.objective(out.u_hat);
  out.kkt_residual = r.kkt_residual;
  out.objective_history = r.objective_history;
  out.status = r.status == BarrierStatus::kConverged ? MpcStatus::kSoftFeasible
                                                     : MpcStatus::kFailed;
  return out;
}

}  // namespace isctrack
