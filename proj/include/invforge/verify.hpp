#ifndef INVFORGE_VERIFY_HPP
#define INVFORGE_VERIFY_HPP

// Independent certificate checks.  Everything here is built from the dense
// kernels in numerics.hpp and closed-form reductions; the SDP solver is never
// consulted, so a solver bug cannot certify its own output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "invforge/errors.hpp"
#include "invforge/numerics.hpp"
#include "invforge/sos.hpp"
#include "invforge/system.hpp"

namespace invforge {

/// Default tolerance for certificate checks; deliberately looser than the
/// solver tolerances so genuine certificates survive round-off.
inline constexpr double kVerifyTol = 1e-6;

/// -PA - A^T P + 2 zeta P B B^T P^T
inline SymMatrix invariance_matrix(const LinearSystem& sys, const SymMatrix& P, double zeta) {
  const Matrix pa = P.matrix() * sys.A;
  const Matrix pb = P.matrix() * sys.B;
  return SymMatrix(-pa - pa.transpose() + 2.0 * zeta * pb * pb.transpose(), 1e-9);
}

inline bool check_invariance_condition(const LinearSystem& sys, const SymMatrix& P, double zeta,
                                       double tol) {
  return is_psd(invariance_matrix(sys, P, zeta), tol);
}

/// [[Phat, PB], [B^T P^T, I_m]]
inline SymMatrix relaxation_block(const LinearSystem& sys, const SymMatrix& P,
                                  const SymMatrix& Phat) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  Matrix blk(n + m, n + m);
  const Matrix pb = P.matrix() * sys.B;
  blk.topLeftCorner(n, n) = Phat.matrix();
  blk.topRightCorner(n, m) = pb;
  blk.bottomLeftCorner(m, n) = pb.transpose();
  blk.bottomRightCorner(m, m) = Matrix::Identity(m, m);
  return SymMatrix(blk, 1e-9);
}

inline bool check_relaxed_conditions(const LinearSystem& sys, const SymMatrix& P,
                                     const SymMatrix& Phat, double zeta, double tol) {
  const Matrix pa = P.matrix() * sys.A;
  const SymMatrix first(-pa - pa.transpose() + 2.0 * zeta * Phat.matrix(), 1e-9);
  return is_psd(first, tol) && is_psd(relaxation_block(sys, P, Phat), tol);
}

/// Evaluates the exact invariance condition at a tuple that satisfies the
/// relaxed pair.  Throws PreconditionFailed when the relaxed pair does not hold.
inline bool theorem1_check(const LinearSystem& sys, const SymMatrix& P, const SymMatrix& Phat,
                           double zeta) {
  if (!check_relaxed_conditions(sys, P, Phat, zeta, 1e-8)) {
    throw Error(ErrorKind::PreconditionFailed, "relaxed conditions do not hold at tol 1e-8");
  }
  return check_invariance_condition(sys, P, zeta, 1e-8);
}

namespace detail {

// Minimum of s over the boundary {x^T P x = l} for n = 2: dense angular scan
// followed by golden-section refinement around the best sample.
inline double boundary_min_planar(const Ellipsoid& ell, const QuadraticPolynomial& s) {
  const Matrix lt = cholesky_psd(ell.P).transpose();
  const double r = std::sqrt(ell.l);
  auto value = [&](double th) {
    const Vector u = Eigen::Vector2d(std::cos(th), std::sin(th));
    const Vector x = r * lt.triangularView<Eigen::Upper>().solve(u);
    return s(x);
  };
  constexpr int kSamples = 4096;
  const double h = 2.0 * std::numbers::pi / kSamples;
  int best = 0;
  double best_val = value(0.0);
  for (int i = 1; i < kSamples; ++i) {
    const double v = value(i * h);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = (best - 1) * h;
  double hi = (best + 1) * h;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - gr * (hi - lo);
  double b = lo + gr * (hi - lo);
  double fa = value(a), fb = value(b);
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = value(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = value(b);
    }
  }
  return std::min({best_val, fa, fb});
}

// n >= 3: projected gradient on the unit sphere in whitened coordinates,
// multistart from +/- axes and deterministic random directions.
inline double boundary_min_sphere(const Ellipsoid& ell, const QuadraticPolynomial& s) {
  const int n = ell.dim();
  const Matrix l = cholesky_psd(ell.P);
  const auto tri = l.triangularView<Eigen::Lower>();
  Matrix t = tri.solve(s.Q.matrix());
  Matrix h = ell.l * tri.solve(t.transpose());
  h = 0.5 * (h + h.transpose()).eval();
  const Vector g = std::sqrt(ell.l) * tri.solve(s.q);
  auto f = [&](const Vector& u) { return u.dot(h * u) + g.dot(u) + s.c; };
  const double step = 1.0 / (2.0 * h.norm() + g.norm() + 1.0);

  std::vector<Vector> starts;
  for (int i = 0; i < n; ++i) {
    starts.push_back(Vector::Unit(n, i));
    starts.push_back(-Vector::Unit(n, i));
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 64; ++i) {
    Vector u(n);
    for (int j = 0; j < n; ++j) u(j) = normal(rng);
    starts.push_back(u.normalized());
  }
  double best = std::numeric_limits<double>::infinity();
  for (Vector u : starts) {
    for (int it = 0; it < 5000; ++it) {
      Vector next = u - step * (2.0 * h * u + g);
      next.normalize();
      const double moved = (next - u).norm();
      u = next;
      if (moved < 1e-13) break;
    }
    best = std::min(best, f(u));
  }
  return best;
}

}  // namespace detail

/// Is {x^T P x <= l} inside {s >= 0}?  Centered safe sets use the closed form
/// l * lambda_max(P^{-1}(-Q_s)) <= c_s; off-center sets minimize s over the
/// ellipsoid boundary numerically.
inline bool check_containment(const Ellipsoid& ell, const QuadraticPolynomial& s, double tol) {
  if (s.dim() != ell.dim()) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  if (lambda_max(s.Q) >= 0.0) {
    throw Error(ErrorKind::InvalidInput, "containment check needs a compact safe set (Q_s < 0)");
  }
  if (s.q.cwiseAbs().maxCoeff() == 0.0) {
    return ell.l * gen_eig_max(SymMatrix(-s.Q.matrix()), ell.P) <= s.c + tol;
  }
  // s restricted to the ellipsoid is concave, so its minimum sits on the boundary.
  double m = 0.0;
  if (ell.dim() == 1) {
    const double r = std::sqrt(ell.l / ell.P(0, 0));
    m = std::min(s(Vector::Constant(1, r)), s(Vector::Constant(1, -r)));
  } else if (ell.dim() == 2) {
    m = detail::boundary_min_planar(ell, s);
  } else {
    m = detail::boundary_min_sphere(ell, s);
  }
  return m >= -tol;
}

/// max ||K x||^2 over the ellipsoid, i.e. l * lambda_max(P^{-1} K^T K).
inline double max_control_effort(const Ellipsoid& ell, const Controller& ctrl) {
  const SymMatrix ktk(ctrl.K.transpose() * ctrl.K, 1e-9);
  return ell.l * gen_eig_max(ktk, ell.P);
}

inline bool check_control_bound(const Ellipsoid& ell, const Controller& ctrl,
                                const LinearSystem& sys, double tol) {
  return max_control_effort(ell, ctrl) <= sys.u_max + tol;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> barrier;  // b(x(t_k))
  double max_input_sq = 0.0;    // max_k ||K x(t_k)||^2
  bool start_outside = false;   // b(x0) < 0

  double min_barrier() const {
    return barrier.empty() ? 0.0 : *std::min_element(barrier.begin(), barrier.end());
  }
};

class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, Vector last_state, double time)
      : Error(ErrorKind::Diverged, what), last_state_(std::move(last_state)), time_(time) {}
  const Vector& last_state() const { return last_state_; }
  double time() const { return time_; }

 private:
  Vector last_state_;
  double time_;
};

/// Fixed-step classical RK4 on x' = (A + B K) x.
inline Trajectory simulate_closed_loop(const LinearSystem& sys, const Controller& ctrl,
                                       const Ellipsoid& ell, const Vector& x0, double dt, double T) {
  if (!(dt > 0.0) || !(T >= dt)) throw Error(ErrorKind::InvalidInput, "need dt > 0 and T >= dt");
  if (x0.size() != sys.state_dim()) throw Error(ErrorKind::InvalidInput, "x0 has wrong dimension");
  const Matrix acl = sys.A + sys.B * ctrl.K;
  const auto steps = static_cast<long>(std::llround(T / dt));

  Trajectory tr;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.barrier.reserve(steps + 1);
  auto record = [&](double t, const Vector& x) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.barrier.push_back(ell.barrier(x));
    tr.max_input_sq = std::max(tr.max_input_sq, ctrl(x).squaredNorm());
  };

  Vector x = x0;
  record(0.0, x);
  tr.start_outside = tr.barrier.front() < 0.0;
  for (long k = 1; k <= steps; ++k) {
    const Vector k1 = acl * x;
    const Vector k2 = acl * (x + 0.5 * dt * k1);
    const Vector k3 = acl * (x + 0.5 * dt * k2);
    const Vector k4 = acl * (x + dt * k3);
    Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      throw DivergedError("closed-loop state became non-finite", x, (k - 1) * dt);
    }
    x = std::move(next);
    record(k * dt, x);
  }
  return tr;
}

/// Runs one simulation per start; results come back in input order.
inline std::vector<Trajectory> simulate_batch(const LinearSystem& sys, const Controller& ctrl,
                                              const Ellipsoid& ell, const std::vector<Vector>& starts,
                                              double dt, double T) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), starts.size()));
  std::vector<Trajectory> out(starts.size());
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < starts.size(); i += workers) {
        out[i] = simulate_closed_loop(sys, ctrl, ell, starts[i], dt, T);
      }
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

/// Uniform samples from the solid ellipsoid {x^T P x <= l}.
inline std::vector<Vector> sample_in_ellipsoid(const Ellipsoid& ell, int count, std::uint64_t seed) {
  const int n = ell.dim();
  const Matrix lt = cholesky_psd(ell.P).transpose();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Vector> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vector u(n);
    for (int j = 0; j < n; ++j) u(j) = normal(rng);
    u *= std::pow(uniform(rng), 1.0 / n) / u.norm();
    pts.push_back(std::sqrt(ell.l) * lt.triangularView<Eigen::Upper>().solve(u));
  }
  return pts;
}

}  // namespace invforge

#endif  // INVFORGE_VERIFY_HPP
