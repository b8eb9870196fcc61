#include "verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

namespace isctrack::verify {

namespace {

// Symmetric square root of a PSD matrix.
Mat4 psd_sqrt(const Mat4& M) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (M + M.transpose()));
  const Vec4 ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

class Welford {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  SampleMean result() const {
    SampleMean s;
    s.mean = mean_;
    if (n_ > 1) {
      s.std_error = std::sqrt(m2_ / static_cast<double>(n_ - 1) /
                              static_cast<double>(n_));
    }
    return s;
  }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

void check_horizon(const Eigen::VectorXd& u_hat, int i) {
  if (i < 1 || 2 * i > u_hat.size()) {
    throw std::invalid_argument("oracle: step index outside the control horizon");
  }
}

template <class Fn>
SampleMean sample_error(const Vec4& e_hat, const Mat4& M_hat,
                        const TransitionModel& model,
                        const Eigen::VectorXd& u_hat, int i, long samples,
                        std::mt19937_64& rng, const Fn& fn) {
  check_horizon(u_hat, i);
  const Mat4 L0 = psd_sqrt(M_hat);
  const Mat4 Ls = psd_sqrt(model.Qs);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Welford acc;
  Vec4 z;
  for (long s = 0; s < samples; ++s) {
    for (int j = 0; j < 4; ++j) z(j) = gauss(rng);
    Vec4 e = e_hat + L0 * z;
    for (int k = 0; k < i; ++k) {
      for (int j = 0; j < 4; ++j) z(j) = gauss(rng);
      e = model.A * e + model.B * u_hat.segment<2>(2 * k) + Ls * z;
    }
    acc.add(fn(e));
  }
  return acc.result();
}

// Euclidean projection of (r, s), r, s >= 0, onto
// {r >= sqrt(c), r^2 + s^2 <= P}.
std::pair<double, double> project_rs(double r, double s, double c, double P) {
  const double rc = std::sqrt(c);
  if (r >= rc && r * r + s * s <= P) return {r, s};
  if (r < rc && rc * rc + s * s <= P) return {rc, s};
  const double n = std::hypot(r, s);
  if (n > 0.0) {
    const double k = std::sqrt(P) / n;
    if (r * k >= rc) return {r * k, s * k};
  }
  return {rc, std::sqrt(std::max(P - c, 0.0))};
}

cdouble phase_of(cdouble z) {
  const double a = std::abs(z);
  return a > 0.0 ? z / a : cdouble(1.0, 0.0);
}

}  // namespace

Eigen::MatrixXd fd_jacobian(const Vec4& s_target, const MotionState& uav,
                            const Beamformer& w, const RfConstants& k,
                            const ArrayGeometry& geom, double h) {
  const Eigen::VectorXd f0 =
      measurement_mean(uav, MotionState(s_target), w, k, geom);
  Eigen::MatrixXd J(f0.size(), 4);
  for (int j = 0; j < 4; ++j) {
    Vec4 sp = s_target;
    Vec4 sm = s_target;
    sp(j) += h;
    sm(j) -= h;
    J.col(j) = (measurement_mean(uav, MotionState(sp), w, k, geom) -
                measurement_mean(uav, MotionState(sm), w, k, geom)) /
               (2.0 * h);
  }
  return J;
}

double rowwise_relative_error(const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("rowwise_relative_error: shape mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index r = 0; r < B.rows(); ++r) {
    const double scale = B.row(r).cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    worst = std::max(worst, (A.row(r) - B.row(r)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

std::pair<Vec4, Mat4> recursive_moments(const Vec4& e_hat, const Mat4& M_hat,
                                        const TransitionModel& model,
                                        const Eigen::VectorXd& u_hat, int i) {
  check_horizon(u_hat, i);
  Vec4 mean = e_hat;
  Mat4 cov = M_hat;
  for (int k = 0; k < i; ++k) {
    mean = model.A * mean + model.B * u_hat.segment<2>(2 * k);
    cov = model.A * cov * model.A.transpose() + model.Qs;
  }
  return {mean, cov};
}

SampleMean sampled_d4(const Vec4& e_hat, const Mat4& M_hat,
                      const TransitionModel& model,
                      const Eigen::VectorXd& u_hat, int i, double H,
                      long samples, std::mt19937_64& rng) {
  const double H2 = H * H;
  return sample_error(e_hat, M_hat, model, u_hat, i, samples, rng,
                      [H2](const Vec4& e) {
                        const double d2 = e.head<2>().squaredNorm() + H2;
                        return d2 * d2;
                      });
}

SampleMean sampled_quadratic(const Vec4& e_hat, const Mat4& M_hat,
                             const TransitionModel& model,
                             const Eigen::VectorXd& u_hat, int i,
                             const Mat4& Q, long samples,
                             std::mt19937_64& rng) {
  return sample_error(e_hat, M_hat, model, u_hat, i, samples, rng,
                      [&Q](const Vec4& e) { return e.dot(Q * e); });
}

GainMaximum projected_gradient_gain(const CVec& a_obj, const CVec& a_con,
                                    double need, double p_t,
                                    std::mt19937_64& rng) {
  const double con2 = a_con.squaredNorm();
  const double c = need / con2;  // required |u1^H w|^2
  if (c > p_t * (1.0 + 1e-12)) {
    throw std::invalid_argument("projected_gradient_gain: empty feasible set");
  }
  const CVec u1 = a_con / std::sqrt(con2);

  auto project = [&](const CVec& w) {
    const cdouble x = u1.dot(w);
    CVec y = w - x * u1;
    const double s = y.norm();
    const auto [r2, s2] = project_rs(std::abs(x), s, c, p_t);
    CVec out = (r2 * phase_of(x)) * u1;
    if (s > 0.0) out += (s2 / s) * y;
    return out;
  };
  auto gain = [&](const CVec& w) { return std::norm(a_obj.dot(w)); };

  const double step = 1.0 / a_obj.squaredNorm();
  std::vector<CVec> starts;
  starts.push_back(std::sqrt(p_t) * a_obj / a_obj.norm());
  starts.push_back(std::sqrt(p_t) * u1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int r = 0; r < 3; ++r) {
    CVec w(a_obj.size());
    for (Eigen::Index m = 0; m < w.size(); ++m) {
      w(m) = cdouble(gauss(rng), gauss(rng));
    }
    starts.push_back(std::sqrt(p_t) * w / w.norm());
  }

  GainMaximum best;
  best.value = -1.0;
  for (const CVec& w0 : starts) {
    CVec w = project(w0);
    int it = 0;
    for (; it < 200000; ++it) {
      const CVec grad = 2.0 * a_obj * a_obj.dot(w);
      const CVec next = project(w + step * grad);
      const double move = (next - w).norm();
      w = next;
      if (move <= 1e-14 * std::sqrt(p_t)) break;
    }
    const double g = gain(w);
    best.iterations += it;
    if (g > best.value) {
      best.value = g;
      best.w = w;
    }
  }
  return best;
}

CVec naive_steering_vector(const Vec2& p_from, const Vec2& p_to, double H,
                           int mx, int my) {
  const double dx = p_from.x() - p_to.x();
  const double dy = p_from.y() - p_to.y();
  const double d = std::sqrt(dx * dx + dy * dy + H * H);
  CVec a(mx * my);
  for (int ix = 0; ix < mx; ++ix) {
    for (int iy = 0; iy < my; ++iy) {
      const double ph = std::numbers::pi * (ix * dx / d + iy * dy / d);
      a(ix * my + iy) = cdouble(std::cos(ph), std::sin(ph));
    }
  }
  return a;
}

std::pair<Vec4, Mat4> information_form_update(const Vec4& s_prior,
                                              const Mat4& M_prior,
                                              const Eigen::MatrixXd& F,
                                              const Eigen::VectorXd& qm,
                                              const Eigen::VectorXd& innovation) {
  const Eigen::VectorXd rinv = qm.cwiseInverse();
  const Mat4 info = M_prior.inverse() + F.transpose() * rinv.asDiagonal() * F;
  const Mat4 M_post = info.inverse();
  const Vec4 s_post =
      s_prior + M_post * F.transpose() * rinv.asDiagonal() * innovation;
  return {s_post, 0.5 * (M_post + M_post.transpose())};
}

double scalar_dare_fixed_point(double a, double b, double q, double r,
                               double tol, int max_iter) {
  double p = q;
  for (int it = 0; it < max_iter; ++it) {
    const double next = q + a * a * p - (a * b * p) * (a * b * p) / (r + b * b * p);
    if (std::abs(next - p) <= tol * std::max(1.0, std::abs(p))) return next;
    p = next;
  }
  return p;
}

double closed_loop_lqr_cost(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const std::vector<Eigen::MatrixXd>& K,
                            const Eigen::VectorXd& e1) {
  Eigen::VectorXd e = e1;
  double cost = 0.0;
  for (const auto& Kk : K) {
    const Eigen::VectorXd u = -Kk * e;
    cost += u.dot(R * u);
    e = A * e + B * u;
    cost += e.dot(Q * e);
  }
  return cost;
}

namespace {

// g(y) = alpha (qa y^2 + qb y + qc)^2 + xa y^2 + xb y + xc along u0 + y d.
struct LinePoly {
  double alpha, qa, qb, qc, xa, xb, xc;

  double operator()(double y) const {
    const double q = (qa * y + qb) * y + qc;
    return alpha * q * q + (xa * y + xb) * y + xc;
  }
};

LinePoly restrict_to_line(const QuarticForm& f, const Vec2& u0, const Vec2& d) {
  const Eigen::Matrix2d P = f.P;
  const Eigen::Matrix2d X = f.X;
  const Vec2 b = f.b;
  const Vec2 z = f.z;
  LinePoly g;
  g.alpha = f.alpha;
  g.qa = d.dot(P * d);
  g.qb = 2.0 * (u0.dot(P * d) + b.dot(d));
  g.qc = u0.dot(P * u0) + 2.0 * b.dot(u0) + f.c;
  g.xa = d.dot(X * d);
  g.xb = 2.0 * (u0.dot(X * d) + z.dot(d));
  g.xc = u0.dot(X * u0) + 2.0 * z.dot(u0) + f.w;
  return g;
}

// Shrinks [lo, hi] to the part where the convex g is <= 0. Returns false if
// that part is empty.
bool clip_interval(const LinePoly& g, double& lo, double& hi) {
  if (g.alpha == 0.0) {
    const double A = g.xa, B = g.xb, C = g.xc;
    if (A > 0.0) {
      const double disc = B * B - 4.0 * A * C;
      if (disc < 0.0) return false;
      const double sq = std::sqrt(disc);
      // numerically stable pair of roots
      const double qr = -0.5 * (B + std::copysign(sq, B));
      double r1 = qr / A;
      double r2 = qr != 0.0 ? C / qr : r1;
      if (r1 > r2) std::swap(r1, r2);
      lo = std::max(lo, r1);
      hi = std::min(hi, r2);
    } else if (B != 0.0) {
      const double r = -C / B;
      if (B > 0.0) hi = std::min(hi, r); else lo = std::max(lo, r);
    } else if (C > 0.0) {
      return false;
    }
    return lo <= hi;
  }
  // Ternary search for the minimum, then bisection toward each end.
  double a = lo, b = hi;
  for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (g(m1) < g(m2)) b = m2; else a = m1;
  }
  const double ym = 0.5 * (a + b);
  if (g(ym) > 0.0) return false;
  if (g(lo) > 0.0) {
    double in = ym, out = lo;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (in + out);
      (g(mid) <= 0.0 ? in : out) = mid;
    }
    lo = in;
  }
  if (g(hi) > 0.0) {
    double in = ym, out = hi;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (in + out);
      (g(mid) <= 0.0 ? in : out) = mid;
    }
    hi = in;
  }
  return lo <= hi;
}

}  // namespace

GridResult line_grid_search(const ConvexProgram& prog, double half, double step) {
  if (prog.size() != 2) {
    throw std::invalid_argument("line_grid_search: two variables expected");
  }
  const Eigen::Matrix2d P0 = prog.P0;
  const Vec2 q0 = prog.q0;
  GridResult best;
  const long K = static_cast<long>(half / step + 0.5);
  for (int axis = 0; axis < 2; ++axis) {
    const Vec2 e_fixed = axis == 0 ? Vec2(1, 0) : Vec2(0, 1);
    const Vec2 d = axis == 0 ? Vec2(0, 1) : Vec2(1, 0);
    for (long k = -K; k <= K; ++k) {
      const Vec2 u0 = (k * step) * e_fixed;
      double lo = -half, hi = half;
      bool ok = true;
      for (const QuarticForm& f : prog.constraints) {
        if (!clip_interval(restrict_to_line(f, u0, d), lo, hi)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const double fa = d.dot(P0 * d);
      const double fb = 2.0 * (u0.dot(P0 * d) + q0.dot(d));
      const double y = std::clamp(fa > 0.0 ? -fb / (2.0 * fa) : lo, lo, hi);
      const Vec2 u = u0 + y * d;
      const double v = u.dot(P0 * u) + 2.0 * q0.dot(u) + prog.r0;
      if (!best.found || v < best.objective) {
        best.found = true;
        best.u = u;
        best.objective = v;
      }
    }
  }
  return best;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) *
                     std::max(1.0, b.cwiseAbs().maxCoeff());
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    Eigen::MatrixXd Ap(A.rows(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(k) = A.col(idx[k]);
    const Eigen::VectorXd sp = Ap.colPivHouseholderQr().solve(b);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(k);
    return s;
  };
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    Eigen::Index jmax = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[j] && w(j) > tol && (jmax < 0 || w(j) > w(jmax))) jmax = j;
    if (jmax < 0) break;
    passive[jmax] = true;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      const Eigen::VectorXd s = solve_passive();
      bool positive = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && s(j) <= 0.0) positive = false;
      if (positive) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && x(j) <= tol) {
          passive[j] = false;
          x(j) = 0.0;
        }
    }
  }
  return x;
}

double nnls_kkt_residual(const ConvexProgram& prog, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g0 = prog.objective_gradient(x);
  const double f0 = std::abs(prog.objective(x));
  const Eigen::Index n = x.size();
  const Eigen::Index m = static_cast<Eigen::Index>(prog.constraints.size());
  const double sg = 1.0 + g0.cwiseAbs().maxCoeff();
  const double sf = 1.0 + f0;
  if (m == 0) return (g0.cwiseAbs().maxCoeff()) / sg;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, m);
  Eigen::VectorXd fv(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const QuarticForm& f = prog.constraints[j];
    fv(j) = f.value(x);
    A.block(0, j, n, 1) = f.gradient(x) / sg;
    A(n + j, j) = std::abs(fv(j)) / sf;
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + m);
  b.head(n) = -g0 / sg;
  const Eigen::VectorXd lam = nnls(A, b);
  double comp = 0.0;
  Eigen::VectorXd r = g0;
  for (Eigen::Index j = 0; j < m; ++j) {
    r += lam(j) * prog.constraints[j].gradient(x);
    comp = std::max(comp, lam(j) * std::abs(fv(j)) / sf);
  }
  return std::max(r.cwiseAbs().maxCoeff() / sg, comp);
}

}  // namespace isctrack::verify
