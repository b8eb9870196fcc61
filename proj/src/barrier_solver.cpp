#include "isctrack/barrier_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

namespace isctrack {

QuarticForm QuarticForm::quadratic(const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& z, double w) {
  QuarticForm f;
  f.alpha = 0.0;
  f.P = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  f.b = Eigen::VectorXd::Zero(X.rows());
  f.c = 0.0;
  f.X = X;
  f.z = z;
  f.w = w;
  return f;
}

double QuarticForm::q(const Eigen::VectorXd& x) const {
  return x.dot(P * x) + 2.0 * b.dot(x) + c;
}

double QuarticForm::value(const Eigen::VectorXd& x) const {
  double v = x.dot(X * x) + 2.0 * z.dot(x) + w;
  if (alpha != 0.0) {
    const double qv = q(x);
    v += alpha * qv * qv;
  }
  return v;
}

Eigen::VectorXd QuarticForm::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = 2.0 * (X * x + z);
  if (alpha != 0.0) {
    const Eigen::VectorXd dq = 2.0 * (P * x + b);
    g += 2.0 * alpha * q(x) * dq;
  }
  return g;
}

Eigen::MatrixXd QuarticForm::hessian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd Hs = 2.0 * X;
  if (alpha != 0.0) {
    // d^2 (q^2) = 2 dq dq^T + 2 q d^2 q
    const Eigen::VectorXd dq = 2.0 * (P * x + b);
    Hs += alpha * (2.0 * dq * dq.transpose() + 4.0 * q(x) * P);
  }
  return Hs;
}

double ConvexProgram::objective(const Eigen::VectorXd& x) const {
  return x.dot(P0 * x) + 2.0 * q0.dot(x) + r0;
}

Eigen::VectorXd ConvexProgram::objective_gradient(
    const Eigen::VectorXd& x) const {
  return 2.0 * (P0 * x + q0);
}

double ConvexProgram::max_violation(const Eigen::VectorXd& x) const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& f : constraints) {
    m = std::max(m, f.value(x));
  }
  return m;
}

namespace {

// Returns false when some constraint is not strictly satisfied.
bool barrier_value(const ConvexProgram& prog, const Eigen::VectorXd& x,
                   double t, double& phi) {
  phi = t * prog.objective(x);
  for (const auto& f : prog.constraints) {
    const double v = f.value(x);
    if (!(v < 0.0)) {
      return false;
    }
    phi -= std::log(-v);
  }
  return std::isfinite(phi);
}

Eigen::VectorXd solve_spd(Eigen::MatrixXd H, const Eigen::VectorXd& g) {
  H = 0.5 * (H + H.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() == Eigen::Success) {
    return llt.solve(g);
  }
  const double jitter = 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  H.diagonal().array() += jitter;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  return ldlt.solve(g);
}

}  // namespace

double kkt_residual(const ConvexProgram& prog, const Eigen::VectorXd& x,
                    double t) {
  const Eigen::Index n = prog.size();
  const Eigen::VectorXd g0 = prog.objective_gradient(x);
  std::vector<double> fv;
  std::vector<Eigen::VectorXd> gf;
  Eigen::VectorXd g = t * g0;
  Eigen::MatrixXd Hs = 2.0 * t * prog.P0;
  for (const auto& f : prog.constraints) {
    fv.push_back(f.value(x));
    gf.push_back(f.gradient(x));
    g += gf.back() / -fv.back();
    Hs += f.hessian(x) / -fv.back() +
          gf.back() * gf.back().transpose() / (fv.back() * fv.back());
  }
  const Eigen::VectorXd dx =
      n > 0 ? Eigen::VectorXd(-solve_spd(Hs, g)) : Eigen::VectorXd();
  Eigen::VectorXd r = g0;
  double gap = 0.0;
  for (std::size_t j = 0; j < fv.size(); ++j) {
    const double lambda =
        std::max(0.0, (1.0 + gf[j].dot(dx) / -fv[j]) / (t * -fv[j]));
    r += lambda * gf[j];
    gap += lambda * -fv[j];
  }
  const double stationarity = r.lpNorm<Eigen::Infinity>() /
                              (1.0 + g0.lpNorm<Eigen::Infinity>());
  return std::max(stationarity, gap / (1.0 + std::abs(prog.objective(x))));
}

namespace {

// Called after each centering step with (x, t); returning true ends the run.
using StopRule = std::function<bool(const Eigen::VectorXd&, double)>;

BarrierResult barrier_core(const ConvexProgram& prog_in,
                           const Eigen::VectorXd& x0, const SolverOptions& opts,
                           const StopRule& stop) {
  BarrierResult res;
  res.x = x0;
  const Eigen::Index n = prog_in.size();

  if (prog_in.constraints.empty()) {
    res.x = -solve_spd(prog_in.P0, prog_in.q0);
    res.objective = prog_in.objective(res.x);
    res.objective_history.push_back(res.objective);
    res.status = BarrierStatus::kConverged;
    res.kkt_residual = prog_in.objective_gradient(res.x).lpNorm<Eigen::Infinity>() /
                       (1.0 + prog_in.q0.lpNorm<Eigen::Infinity>());
    return res;
  }

  double phi = 0.0;
  if (!barrier_value(prog_in, x0, opts.t0, phi)) {
    res.status = BarrierStatus::kInfeasibleStart;
    res.objective = prog_in.objective(x0);
    return res;
  }

  // Work on the objective divided by its magnitude at x0 so the gap
  // tolerance is relative; t on the original scale is t / scale.
  const double scale = std::max(1.0, std::abs(prog_in.objective(x0)));
  ConvexProgram prog = prog_in;
  prog.P0 /= scale;
  prog.q0 /= scale;
  prog.r0 /= scale;

  const double m = static_cast<double>(prog.constraints.size());
  double t = opts.t0;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(n);
  Eigen::MatrixXd Hs(n, n);
  bool stalled = false;
  // Best centered point seen; the last centerings can lose accuracy to
  // rounding when a constraint is nearly tight.
  Eigen::VectorXd best_x = x;
  double best_kkt = std::numeric_limits<double>::infinity();
  int centerings = 0;

  while (true) {
    // Centering at the current t. Once the decrement test passes, a couple of
    // extra full steps pin down the multipliers near a tight constraint,
    // where the Hessian is large and a small decrement still allows a large
    // gradient.
    int polish = 0;
    while (res.newton_iterations < opts.max_newton_iterations) {
      g = t * prog.objective_gradient(x);
      Hs = 2.0 * t * prog.P0;
      for (const auto& f : prog.constraints) {
        const double v = f.value(x);
        const Eigen::VectorXd gf = f.gradient(x);
        g += gf / -v;
        Hs += f.hessian(x) / -v + gf * gf.transpose() / (v * v);
      }
      const Eigen::VectorXd dx = -solve_spd(Hs, g);
      const double lambda2 = -g.dot(dx);
      ++res.newton_iterations;
      const bool centered = !(lambda2 > 2.0 * opts.newton_tol);
      if (!(lambda2 > 1e-24) || (centered && polish >= 2)) {
        break;
      }
      // Barrier change along dx, formed from differences so the large
      // t * f0 term does not swamp it.
      const double slope = g.dot(dx);
      const Eigen::VectorXd g0 = prog.objective_gradient(x);
      const double lin = g0.dot(dx);
      const double curv = dx.dot(prog.P0 * dx);
      std::vector<double> fx(prog.constraints.size());
      for (std::size_t j = 0; j < fx.size(); ++j) {
        fx[j] = prog.constraints[j].value(x);
      }
      auto change = [&](double s, double& out) {
        const Eigen::VectorXd xn = x + s * dx;
        out = t * (s * lin + s * s * curv);
        for (std::size_t j = 0; j < fx.size(); ++j) {
          const double v = prog.constraints[j].value(xn);
          if (!(v < 0.0)) {
            return false;
          }
          out -= std::log(v / fx[j]);
        }
        return std::isfinite(out);
      };
      double step = 1.0;
      double delta = 0.0;
      bool accepted = false;
      const double resolution =
          1e-15 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
      while (step * dx.lpNorm<Eigen::Infinity>() > resolution) {
        if (change(step, delta) && delta <= opts.armijo * step * slope) {
          x += step * dx;
          accepted = true;
          break;
        }
        step *= opts.backtrack;
      }
      if (!accepted) {
        stalled = !centered;
        break;
      }
      if (centered) {
        ++polish;
      }
    }
    res.objective_history.push_back(prog_in.objective(x));
    const double kkt = kkt_residual(prog_in, x, t / scale);
    if (kkt <= best_kkt) {
      best_kkt = kkt;
      best_x = x;
    }
    if (stop && stop(x, t / scale)) {
      best_x = x;
      best_kkt = kkt;
      res.status = BarrierStatus::kConverged;
      break;
    }
    if (m / t < opts.gap_tol) {
      res.status = BarrierStatus::kConverged;
      break;
    }
    if (stalled) {
      // After a completed centering a stall means rounding has taken over;
      // the best centered point stands.
      res.status = centerings > 0 ? BarrierStatus::kConverged
                                  : BarrierStatus::kStalled;
      break;
    }
    ++centerings;
    if (res.newton_iterations >= opts.max_newton_iterations) {
      res.status = BarrierStatus::kIterationLimit;
      break;
    }
    t *= opts.mu;
  }

  res.x = best_x;
  res.objective = prog_in.objective(best_x);
  res.kkt_residual = best_kkt;
  return res;
}

}  // namespace

BarrierResult barrier_minimize(const ConvexProgram& prog,
                               const Eigen::VectorXd& x0,
                               const SolverOptions& opts) {
  return barrier_core(prog, x0, opts, nullptr);
}

PhaseOneResult find_strictly_feasible(const ConvexProgram& prog,
                                      const Eigen::VectorXd& x0,
                                      const SolverOptions& opts) {
  PhaseOneResult out;
  out.x = x0;
  out.max_violation = prog.max_violation(x0);
  if (out.max_violation < 0.0) {
    out.feasible = true;
    return out;
  }

  // Variables (x, s): minimize s s.t. f_j(x) - s <= 0 and s >= -1.
  const Eigen::Index n = prog.size();
  auto pad_matrix = [n](const Eigen::MatrixXd& M) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, n + 1);
    out.topLeftCorner(n, n) = M;
    return out;
  };
  auto pad_vector = [n](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 1);
    out.head(n) = v;
    return out;
  };

  ConvexProgram p1;
  p1.P0 = Eigen::MatrixXd::Zero(n + 1, n + 1);
  p1.q0 = Eigen::VectorXd::Zero(n + 1);
  p1.q0(n) = 0.5;
  for (const auto& f : prog.constraints) {
    QuarticForm h;
    h.alpha = f.alpha;
    h.P = pad_matrix(f.P);
    h.b = pad_vector(f.b);
    h.c = f.c;
    h.X = pad_matrix(f.X);
    h.z = pad_vector(f.z);
    h.z(n) = -0.5;
    h.w = f.w;
    p1.constraints.push_back(std::move(h));
  }
  {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n + 1);
    z(n) = -0.5;
    p1.constraints.push_back(
        QuarticForm::quadratic(Eigen::MatrixXd::Zero(n + 1, n + 1), z, -1.0));
  }

  Eigen::VectorXd y(n + 1);
  y.head(n) = x0;
  y(n) = out.max_violation + 1.0;

  SolverOptions o = opts;
  o.gap_tol = 1e-7;
  const double m1 = static_cast<double>(p1.constraints.size());
  // Stop on a strictly feasible center, or once s - m/t > 0 certifies
  // infeasibility.
  const StopRule stop = [n, m1](const Eigen::VectorXd& v, double t) {
    return v(n) < 0.0 || v(n) - m1 / t > 0.0;
  };
  const BarrierResult r = barrier_core(p1, y, o, stop);
  out.newton_iterations = r.newton_iterations;
  out.x = r.x.head(n);
  out.max_violation = prog.max_violation(out.x);
  out.feasible = out.max_violation < 0.0;
  return out;
}

std::string to_string(BarrierStatus s) {
  switch (s) {
    case BarrierStatus::kConverged:
      return "converged";
    case BarrierStatus::kInfeasibleStart:
      return "infeasible-start";
    case BarrierStatus::kIterationLimit:
      return "iteration-limit";
    case BarrierStatus::kStalled:
      return "stalled";
  }
  return "unknown";
}

}  // namespace isctrack
