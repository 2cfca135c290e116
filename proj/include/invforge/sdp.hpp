#ifndef INVFORGE_SDP_HPP
#define INVFORGE_SDP_HPP

// Block-structured semidefinite programs in "LMI form"
//
//     maximize    b^T y
//     subject to  C_k + sum_j y_j A_{k,j}  >= 0   (PSD, one per block k)
//                 E y = f
//
// and a dense primal-dual path-following solver with Nesterov-Todd scaling.
// Equalities are eliminated up front through an orthonormal null-space basis,
// the reduced problem is solved as the dual of a standard-form SDP, and all
// reported residuals are measured back in the original y-space.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "invforge/errors.hpp"
#include "invforge/numerics.hpp"

namespace invforge {

enum class SdpStatus { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::Unbounded: return "Unbounded";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
    case SdpStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

struct SdpOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iters = 200;
  // Objective values above this along a feasible path are reported as Unbounded.
  double objective_ceiling = 1e9;
};

class SdpProblem {
 public:
  struct Block {
    int dim = 0;
    std::string name;
    Matrix constant;
    std::map<int, Matrix> coefficients;  // scalar index -> A_{k,j}
  };

  struct Equality {
    std::map<int, double> coefficients;
    double rhs = 0.0;
  };

  int add_scalar(std::string name = {}) {
    names_.push_back(std::move(name));
    return num_scalars() - 1;
  }

  int add_block(int dim, std::string name = {}) {
    if (dim < 1) throw Error(ErrorKind::InvalidProblem, "block dimension must be positive");
    Block b;
    b.dim = dim;
    b.name = std::move(name);
    b.constant = Matrix::Zero(dim, dim);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
  }

  void set_constant(int block, const Matrix& c) { block_at(block).constant = c; }

  /// Accumulates `a` into A_{block,var}.
  void add_coefficient(int block, int var, const Matrix& a) {
    check_var(var);
    Block& b = block_at(block);
    auto it = b.coefficients.find(var);
    if (it == b.coefficients.end()) {
      b.coefficients.emplace(var, a);
    } else {
      if (it->second.rows() != a.rows() || it->second.cols() != a.cols()) {
        throw Error(ErrorKind::InvalidProblem, "coefficient shape mismatch in block " + b.name);
      }
      it->second += a;
    }
  }

  void add_equality(const std::map<int, double>& coefficients, double rhs) {
    for (const auto& [var, coef] : coefficients) {
      (void)coef;
      check_var(var);
    }
    equalities_.push_back({coefficients, rhs});
  }

  void set_objective(int var, double coef) {
    check_var(var);
    objective_[var] = coef;
  }

  int num_scalars() const { return static_cast<int>(names_.size()); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Equality>& equalities() const { return equalities_; }
  const std::string& scalar_name(int var) const { return names_.at(var); }

  std::vector<int> block_dims() const {
    std::vector<int> dims;
    for (const auto& b : blocks_) dims.push_back(b.dim);
    return dims;
  }

  Vector objective() const {
    Vector b = Vector::Zero(num_scalars());
    for (const auto& [var, coef] : objective_) b(var) = coef;
    return b;
  }

  Matrix equality_matrix() const {
    Matrix e = Matrix::Zero(static_cast<int>(equalities_.size()), num_scalars());
    for (int i = 0; i < static_cast<int>(equalities_.size()); ++i) {
      for (const auto& [var, coef] : equalities_[i].coefficients) e(i, var) += coef;
    }
    return e;
  }

  Vector equality_rhs() const {
    Vector f(static_cast<int>(equalities_.size()));
    for (int i = 0; i < f.size(); ++i) f(i) = equalities_[i].rhs;
    return f;
  }

  /// C_k + sum_j y_j A_{k,j}
  Matrix block_value(int k, const Vector& y) const {
    const Block& b = blocks_.at(k);
    Matrix v = b.constant;
    for (const auto& [var, a] : b.coefficients) v += y(var) * a;
    return v;
  }

  void validate() const {
    for (const auto& b : blocks_) {
      if (b.constant.rows() != b.dim || b.constant.cols() != b.dim) {
        throw Error(ErrorKind::InvalidProblem, "constant of block '" + b.name + "' has wrong shape");
      }
      if (!b.constant.allFinite()) {
        throw Error(ErrorKind::InvalidProblem, "non-finite constant in block '" + b.name + "'");
      }
      check_symmetric(b.constant, b.name);
      for (const auto& [var, a] : b.coefficients) {
        if (var < 0 || var >= num_scalars()) {
          throw Error(ErrorKind::InvalidProblem, "undeclared scalar in block '" + b.name + "'");
        }
        if (a.rows() != b.dim || a.cols() != b.dim) {
          throw Error(ErrorKind::InvalidProblem,
                      "coefficient of '" + scalar_name(var) + "' in block '" + b.name +
                          "' has wrong shape");
        }
        if (!a.allFinite()) throw Error(ErrorKind::InvalidProblem, "non-finite coefficient");
        check_symmetric(a, b.name);
      }
    }
    for (const auto& [var, coef] : objective_) {
      if (var < 0 || var >= num_scalars() || !std::isfinite(coef)) {
        throw Error(ErrorKind::InvalidProblem, "objective references an undeclared scalar");
      }
    }
    for (const auto& eq : equalities_) {
      if (!std::isfinite(eq.rhs)) throw Error(ErrorKind::InvalidProblem, "non-finite equality rhs");
    }
  }

 private:
  Block& block_at(int k) {
    if (k < 0 || k >= num_blocks()) throw Error(ErrorKind::InvalidProblem, "no such block");
    return blocks_[k];
  }

  void check_var(int var) const {
    if (var < 0 || var >= num_scalars()) {
      throw Error(ErrorKind::InvalidProblem, "scalar index " + std::to_string(var) + " undeclared");
    }
  }

  static void check_symmetric(const Matrix& m, const std::string& name) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error(ErrorKind::InvalidProblem, "asymmetric data in block '" + name + "'");
    }
  }

  std::vector<std::string> names_;
  std::vector<Block> blocks_;
  std::vector<Equality> equalities_;
  std::map<int, double> objective_;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  Vector y;
  std::vector<Matrix> block_values;  // C_k + sum_j y_j A_{k,j}
  std::vector<Matrix> block_duals;   // X_k >= 0
  Vector equality_duals;             // w
  double objective_value = 0.0;      // b^T y
  double dual_objective = 0.0;       // sum <C_k, X_k> + w^T f
  double duality_gap = 0.0;          // relative
  double primal_inf = 0.0;
  double dual_inf = 0.0;
  int iterations = 0;
  Vector recession;  // y-space direction when Unbounded
  std::string message;
};

struct SdpResiduals {
  double primal_inf = 0.0;
  double dual_inf = 0.0;
  double gap = 0.0;
};

namespace detail {

inline double frob_dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

inline double min_eig_of(const Matrix& m) {
  if (m.size() == 1) return m(0, 0);
  return lambda_min(SymMatrix(0.5 * (m + m.transpose()), 1.0));
}

/// Residuals of a (y, X, w) triple in the original space.  Shared by the solver
/// report and the public `residuals` check so both use identical definitions.
inline SdpResiduals measure(const SdpProblem& p, const Vector& y, const std::vector<Matrix>& x,
                            const Vector& w, double* primal_obj = nullptr,
                            double* dual_obj = nullptr) {
  SdpResiduals r;
  const Matrix e = p.equality_matrix();
  const Vector f = p.equality_rhs();
  const Vector b = p.objective();

  double worst_block = 0.0;
  for (int k = 0; k < p.num_blocks(); ++k) {
    worst_block = std::max(worst_block, -min_eig_of(p.block_value(k, y)));
  }
  const double eq_res = e.rows() > 0 ? (e * y - f).cwiseAbs().maxCoeff() : 0.0;
  r.primal_inf = worst_block + eq_res;

  Vector g = b;
  double dobj = 0.0;
  double worst_dual_block = 0.0;
  const bool have_x = !x.empty();
  for (int k = 0; k < p.num_blocks() && have_x; ++k) {
    const auto& blk = p.blocks()[k];
    for (const auto& [var, a] : blk.coefficients) g(var) += frob_dot(a, x[k]);
    dobj += frob_dot(blk.constant, x[k]);
    worst_dual_block = std::max(worst_dual_block, -min_eig_of(x[k]));
  }
  if (e.rows() > 0 && w.size() == e.rows()) {
    g -= e.transpose() * w;
    dobj += w.dot(f);
  }
  r.dual_inf = (g.size() > 0 ? g.cwiseAbs().maxCoeff() : 0.0) + worst_dual_block;

  const double pobj = y.size() > 0 ? b.dot(y) : 0.0;
  r.gap = std::abs(dobj - pobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  if (primal_obj) *primal_obj = pobj;
  if (dual_obj) *dual_obj = dobj;
  return r;
}

/// Largest alpha in [0, inf) keeping M + alpha*dM PSD, with M = L L^T.
inline double max_step(const Matrix& chol_l, const Matrix& dm) {
  const auto tri = chol_l.triangularView<Eigen::Lower>();
  Matrix t = tri.solve(dm);
  Matrix sym = tri.solve(t.transpose());
  const double lmin = min_eig_of(sym);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

// Reduced problem in standard-dual form:
//   max  bt^T z   s.t.  S(z) = Ct + sum_i z_i At_i >= 0
class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& p, const SdpOptions& opts) : p_(p), opts_(opts) {}

  SdpSolution run() {
    SdpSolution sol;
    const int nv = p_.num_scalars();
    const Vector b = p_.objective();
    const Matrix e = p_.equality_matrix();
    const Vector f = p_.equality_rhs();

    // Eliminate equalities: y = y0 + N z, y0 least-norm.
    Vector y0 = Vector::Zero(nv);
    Matrix basis = Matrix::Identity(nv, nv);
    if (e.rows() > 0) {
      Eigen::JacobiSVD<Matrix> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
      int rank = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > 1e-12 * std::max(1.0, smax)) ++rank;
      }
      svd.setThreshold(1e-12);
      y0 = svd.solve(f);
      if ((e * y0 - f).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + f.cwiseAbs().maxCoeff())) {
        sol.status = SdpStatus::Infeasible;
        sol.y = y0;
        sol.message = "inconsistent linear equalities";
        finish(sol, y0, {}, Vector());
        return sol;
      }
      basis = svd.matrixV().rightCols(nv - rank);
      eq_pinv_t_.compute(Matrix(e.transpose()));
      have_eq_ = true;
    }
    const int nz = static_cast<int>(basis.cols());

    const int nb = p_.num_blocks();
    ct_.resize(nb);
    at_.assign(nb, std::vector<Matrix>(nz));
    for (int k = 0; k < nb; ++k) {
      const auto& blk = p_.blocks()[k];
      ct_[k] = p_.block_value(k, y0);
      for (int i = 0; i < nz; ++i) at_[k][i] = Matrix::Zero(blk.dim, blk.dim);
      for (const auto& [var, a] : blk.coefficients) {
        for (int i = 0; i < nz; ++i) {
          if (basis(var, i) != 0.0) at_[k][i] += basis(var, i) * a;
        }
      }
    }
    bt_ = basis.transpose() * b;

    if (nz == 0 || nb == 0) {
      // Nothing to optimize over the cone: either a pure feasibility check or
      // an unconstrained linear objective.
      if (nb == 0 && nz > 0 && bt_.norm() > 0.0) {
        sol.status = SdpStatus::Unbounded;
        sol.recession = basis * bt_.normalized();
        sol.message = "objective is unconstrained";
        finish(sol, y0, {}, Vector());
        return sol;
      }
      std::vector<Matrix> zero_x;
      for (int k = 0; k < nb; ++k) zero_x.push_back(Matrix::Zero(p_.blocks()[k].dim, p_.blocks()[k].dim));
      finish(sol, y0, zero_x, equality_multipliers(zero_x));
      sol.status = sol.primal_inf <= opts_.feas_tol ? SdpStatus::Optimal : SdpStatus::Infeasible;
      return sol;
    }

    // Starting point (SDPT3-style magnitudes).
    int ntot = 0;
    double norm_c = 0.0;
    double max_a = 0.0;
    for (int k = 0; k < nb; ++k) {
      ntot += p_.blocks()[k].dim;
      norm_c = std::max(norm_c, ct_[k].norm());
    }
    double xi = std::max(10.0, std::sqrt(static_cast<double>(ntot)));
    for (int i = 0; i < nz; ++i) {
      double na = 0.0;
      for (int k = 0; k < nb; ++k) na += at_[k][i].squaredNorm();
      na = std::sqrt(na);
      max_a = std::max(max_a, na);
      xi = std::max(xi, ntot * (1.0 + std::abs(bt_(i))) / (1.0 + na));
    }
    const double eta = std::max({10.0, std::sqrt(static_cast<double>(ntot)), max_a, norm_c});

    std::vector<Matrix> x(nb), s(nb);
    for (int k = 0; k < nb; ++k) {
      const int d = p_.blocks()[k].dim;
      x[k] = xi * Matrix::Identity(d, d);
      s[k] = eta * Matrix::Identity(d, d);
    }
    Vector z = Vector::Zero(nz);
    Vector z_prev = z;
    const double x0_norm = xi * std::sqrt(static_cast<double>(ntot));
    int stalls = 0;

    for (int iter = 0; iter <= opts_.max_iters; ++iter) {
      sol.iterations = iter;
      const Vector y = y0 + basis * z;
      finish(sol, y, x, equality_multipliers(x));
      if (!y.allFinite()) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "non-finite iterate";
        return sol;
      }
      if (sol.primal_inf <= opts_.feas_tol && sol.dual_inf <= opts_.feas_tol &&
          sol.duality_gap <= opts_.gap_tol) {
        sol.status = SdpStatus::Optimal;
        return sol;
      }
      if (sol.objective_value > opts_.objective_ceiling && sol.primal_inf <= 1e-6) {
        sol.status = SdpStatus::Unbounded;
        const Vector dy = basis * (z - z_prev);
        sol.recession = dy.norm() > 0 ? Vector(dy.normalized()) : dy;
        sol.message = "objective exceeded ceiling along a feasible path";
        return sol;
      }
      double xnorm = 0.0;
      for (const auto& xk : x) xnorm += xk.squaredNorm();
      xnorm = std::sqrt(xnorm);
      if (xnorm > 1e8 * std::max(1.0, x0_norm) && infeasibility_certificate(x, xnorm)) {
        sol.status = SdpStatus::Infeasible;
        sol.message = "dual ray certifies primal infeasibility";
        return sol;
      }
      if (iter == opts_.max_iters) break;

      if (!step(x, s, z, z_prev, stalls, sol)) return sol;
      if (stalls >= 5) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "step lengths collapsed";
        return sol;
      }
    }
    sol.status = SdpStatus::IterationLimit;
    sol.message = "iteration limit reached";
    return sol;
  }

 private:
  Vector aop(const std::vector<Matrix>& x) const {
    // A'(X)_i = -<At_i, X>
    const int nz = static_cast<int>(bt_.size());
    Vector v = Vector::Zero(nz);
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (int i = 0; i < nz; ++i) v(i) -= frob_dot(at_[k][i], x[k]);
    }
    return v;
  }

  Matrix aop_t(std::size_t k, const Vector& z) const {
    // (A'^T z)_k = -sum_i z_i At_{k,i}
    Matrix m = Matrix::Zero(ct_[k].rows(), ct_[k].cols());
    for (int i = 0; i < z.size(); ++i) m -= z(i) * at_[k][i];
    return m;
  }

  Vector equality_multipliers(const std::vector<Matrix>& x) const {
    if (!have_eq_) return Vector();
    Vector g = p_.objective();
    for (int k = 0; k < p_.num_blocks() && !x.empty(); ++k) {
      for (const auto& [var, a] : p_.blocks()[k].coefficients) g(var) += frob_dot(a, x[k]);
    }
    return eq_pinv_t_.solve(g);
  }

  void finish(SdpSolution& sol, const Vector& y, const std::vector<Matrix>& x,
              const Vector& w) const {
    sol.y = y;
    sol.block_values.clear();
    for (int k = 0; k < p_.num_blocks(); ++k) sol.block_values.push_back(p_.block_value(k, y));
    sol.block_duals = x;
    sol.equality_duals = w;
    const SdpResiduals r = measure(p_, y, x, w, &sol.objective_value, &sol.dual_objective);
    sol.primal_inf = r.primal_inf;
    sol.dual_inf = r.dual_inf;
    sol.duality_gap = r.gap;
  }

  bool infeasibility_certificate(const std::vector<Matrix>& x, double xnorm) const {
    double cx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) cx += frob_dot(ct_[k], x[k]) / xnorm;
    const double ax = aop(x).norm() / xnorm;
    return cx < 0.0 && ax <= 1e-6 * std::abs(cx);
  }

  // One predictor-corrector iteration.  Returns false (with sol.status set) on
  // a hard numerical failure.
  bool step(std::vector<Matrix>& x, std::vector<Matrix>& s, Vector& z, Vector& z_prev, int& stalls,
            SdpSolution& sol) const {
    const std::size_t nb = x.size();
    const int nz = static_cast<int>(z.size());

    std::vector<Matrix> lx(nb), ls(nb), w(nb), s_inv(nb), rd(nb);
    double xs = 0.0;
    int ntot = 0;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> cx(x[k]), cs(s[k]);
      if (cx.info() != Eigen::Success || cs.info() != Eigen::Success) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "iterate left the cone interior";
        return false;
      }
      lx[k] = cx.matrixL();
      ls[k] = cs.matrixL();
      // Nesterov-Todd scaling point: W S W = X.
      Eigen::JacobiSVD<Matrix> svd(ls[k].transpose() * lx[k], Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vector sv = svd.singularValues();
      if (sv.minCoeff() <= 0.0) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "degenerate scaling";
        return false;
      }
      const Matrix g = lx[k] * svd.matrixV() * sv.cwiseSqrt().cwiseInverse().asDiagonal();
      w[k] = g * g.transpose();
      s_inv[k] = cs.solve(Matrix::Identity(s[k].rows(), s[k].cols()));
      rd[k] = ct_[k] - aop_t(k, z);  // C' - A'^T z
      rd[k] -= s[k];
      xs += frob_dot(x[k], s[k]);
      ntot += static_cast<int>(x[k].rows());
    }
    const double mu = xs / ntot;
    // Standard pair: min <C',X> s.t. A'(X) = b' with C' = Ct, A' = -At, b' = bt.
    const Vector rp = bt_ - aop(x);

    // Schur complement M_ij = sum_k <A'_i, W A'_j W> = sum_k <At_i, W At_j W>.
    Matrix schur = Matrix::Zero(nz, nz);
    std::vector<std::vector<Matrix>> wa(nb, std::vector<Matrix>(nz));
    for (std::size_t k = 0; k < nb; ++k) {
      for (int j = 0; j < nz; ++j) wa[k][j] = w[k] * at_[k][j] * w[k];
      for (int i = 0; i < nz; ++i) {
        for (int j = i; j < nz; ++j) {
          const double v = frob_dot(at_[k][i], wa[k][j]);
          schur(i, j) += v;
          if (i != j) schur(j, i) += v;
        }
      }
    }
    Eigen::LDLT<Matrix> ldlt(schur);
    const bool ldlt_ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    if (!ldlt_ok) cod.compute(schur);
    auto solve_schur = [&](const Vector& rhs) -> Vector {
      return ldlt_ok ? Vector(ldlt.solve(rhs)) : Vector(cod.solve(rhs));
    };

    // Direction for a target sigma*mu with corrector term `corr` (may be empty).
    auto direction = [&](double target, const std::vector<Matrix>* corr, std::vector<Matrix>& dx,
                         std::vector<Matrix>& ds, Vector& dz) {
      std::vector<Matrix> rc(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        rc[k] = target * s_inv[k] - x[k];
        if (corr) rc[k] -= (*corr)[k];
      }
      // A'(W A'^T dz W) = rp - A'(Rc - W Rd W);  A'^T dz = -sum dz_i At_i
      std::vector<Matrix> tmp(nb);
      for (std::size_t k = 0; k < nb; ++k) tmp[k] = rc[k] - w[k] * rd[k] * w[k];
      const Vector rhs = rp - aop(tmp);
      // A'(W A'^T dz W)_i = sum_j <At_i, W At_j W> dz_j = (schur dz)_i
      dz = solve_schur(rhs);
      dx.resize(nb);
      ds.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        ds[k] = rd[k] - aop_t(k, dz);
        ds[k] = 0.5 * (ds[k] + ds[k].transpose()).eval();
        dx[k] = rc[k] - w[k] * ds[k] * w[k];
        dx[k] = 0.5 * (dx[k] + dx[k].transpose()).eval();
      }
    };

    auto step_lengths = [&](const std::vector<Matrix>& dx, const std::vector<Matrix>& ds) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = ap;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(lx[k], dx[k]));
        ad = std::min(ad, max_step(ls[k], ds[k]));
      }
      return std::pair<double, double>{ap, ad};
    };

    std::vector<Matrix> dx, ds;
    Vector dz;
    direction(0.0, nullptr, dx, ds, dz);
    auto [ap_max, ad_max] = step_lengths(dx, ds);
    const double ap = std::min(1.0, ap_max);
    const double ad = std::min(1.0, ad_max);
    double xs_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      xs_aff += frob_dot(x[k] + ap * dx[k], s[k] + ad * ds[k]);
    }
    double sigma = std::pow(std::max(0.0, xs_aff) / xs, 3);
    // Short affine steps mean the iterate is near the boundary; center more.
    sigma = std::max(sigma, std::pow(1.0 - std::min(ap, ad), 2));
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Mehrotra second-order term, symmetrized (dX dS S^{-1}).
    std::vector<Matrix> corr(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const Matrix t = dx[k] * ds[k] * s_inv[k];
      corr[k] = 0.5 * (t + t.transpose());
    }
    direction(sigma * mu, &corr, dx, ds, dz);
    if (!dz.allFinite()) {
      sol.status = SdpStatus::NumericalFailure;
      sol.message = "non-finite search direction";
      return false;
    }
    std::tie(ap_max, ad_max) = step_lengths(dx, ds);
    const double gamma = 0.95;
    // Rounding can put the eigenvalue-based step just outside the cone, so the
    // trial point is confirmed by Cholesky and shortened if needed.
    auto interior_step = [&](const std::vector<Matrix>& m, const std::vector<Matrix>& dm, double alpha,
                             std::vector<Matrix>& out) {
      out.resize(nb);
      for (int tries = 0; tries < 60; ++tries, alpha *= 0.8) {
        bool ok = true;
        for (std::size_t k = 0; k < nb && ok; ++k) {
          out[k] = m[k] + alpha * dm[k];
          out[k] = 0.5 * (out[k] + out[k].transpose()).eval();
          ok = Eigen::LLT<Matrix>(out[k]).info() == Eigen::Success;
        }
        if (ok) return alpha;
      }
      out = m;
      return 0.0;
    };
    std::vector<Matrix> x_new, s_new;
    const double alpha_p = interior_step(x, dx, std::min(1.0, gamma * ap_max), x_new);
    const double alpha_d = interior_step(s, ds, std::min(1.0, gamma * ad_max), s_new);

    z_prev = z;
    x = std::move(x_new);
    s = std::move(s_new);
    z += alpha_d * dz;
    stalls = (alpha_p < 1e-8 && alpha_d < 1e-8) ? stalls + 1 : 0;
    return true;
  }

  const SdpProblem& p_;
  SdpOptions opts_;
  std::vector<Matrix> ct_;
  std::vector<std::vector<Matrix>> at_;
  Vector bt_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> eq_pinv_t_;
  bool have_eq_ = false;
};

}  // namespace detail

inline SdpSolution solve(const SdpProblem& p, const SdpOptions& opts = {}) {
  p.validate();
  return detail::InteriorPoint(p, opts).run();
}

/// Recomputes primal infeasibility, dual infeasibility and relative gap of `s`
/// from scratch.  An empty `block_duals` is read as X = 0.
inline SdpResiduals residuals(const SdpProblem& p, const SdpSolution& s) {
  p.validate();
  if (s.y.size() != p.num_scalars()) {
    throw Error(ErrorKind::InvalidProblem, "solution has " + std::to_string(s.y.size()) +
                                               " scalars, problem declares " +
                                               std::to_string(p.num_scalars()));
  }
  if (!s.block_duals.empty()) {
    if (static_cast<int>(s.block_duals.size()) != p.num_blocks()) {
      throw Error(ErrorKind::InvalidProblem, "block dual count mismatch");
    }
    for (int k = 0; k < p.num_blocks(); ++k) {
      if (s.block_duals[k].rows() != p.blocks()[k].dim || s.block_duals[k].cols() != p.blocks()[k].dim) {
        throw Error(ErrorKind::InvalidProblem, "block dual shape mismatch");
      }
    }
  }
  if (s.equality_duals.size() != 0 &&
      s.equality_duals.size() != static_cast<int>(p.equalities().size())) {
    throw Error(ErrorKind::InvalidProblem, "equality multiplier count mismatch");
  }
  return detail::measure(p, s.y, s.block_duals, s.equality_duals);
}

}  // namespace invforge

#endif  // INVFORGE_SDP_HPP
