#ifndef INVFORGE_SYNTHESIS_HPP
#define INVFORGE_SYNTHESIS_HPP

// Alternating synthesis of an ellipsoidal controlled-invariant set
// {x^T P x <= l} and a gain u = -zeta B^T P^T x.
//
//  * program 9 (zeta fixed):  max l  over (P, Phat, l, sigma) subject to the
//    containment Gram matrix, the relaxed invariance pair
//        -PA - A^T P + 2 zeta Phat >= 0,   [[Phat, PB], [B^T P^T, I]] >= 0,
//    sigma >= 0, P >= eps_P I and trace(P) = n;
//  * program 10 ((P, l) fixed):  max t = zeta^2  subject to the input-bound
//    Gram matrix and t, sigma2 >= 0.
//
// The relaxed pair only bounds Phat from below, so for zeta > 0 it can always
// be met by a large enough Phat and program 9 effectively reduces to the
// containment problem.  Each iterate is therefore re-checked against the exact
// invariance condition; when no iterate of the alternation passes, the last
// (P, l) is completed by raising zeta to the smallest value making the exact
// condition hold and shrinking l until program 10 admits that gain.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "invforge/errors.hpp"
#include "invforge/numerics.hpp"
#include "invforge/sdp.hpp"
#include "invforge/sos.hpp"
#include "invforge/system.hpp"
#include "invforge/verify.hpp"

namespace invforge {

struct SynthesisConfig {
  double zeta0 = 0.1;
  int max_outer_iters = 50;
  double l_tol = 1e-6;   // relative stagnation tolerance on l
  double psd_tol = 1e-8;
  double eps_P = 1e-6;   // P >= eps_P I
  double margin = 0.0;   // subtracted from the constant Gram entry of the containment constraint
  double verify_tol = kVerifyTol;
  int multiplier_degree = 0;
  // Adds Phat <= c I with c large enough that every feasible (P, l, sigma)
  // stays feasible.  Without it Phat is unbounded above and the interior-point
  // iterates drift off along the optimal face.
  bool cap_phat = true;
  SdpOptions sdp;

  void validate() const {
    if (!(zeta0 > 0.0)) throw Error(ErrorKind::InvalidInput, "zeta0 must be positive");
    if (max_outer_iters < 1) throw Error(ErrorKind::InvalidInput, "max_outer_iters must be >= 1");
    if (!(l_tol > 0.0) || !(psd_tol > 0.0) || !(eps_P > 0.0) || !(verify_tol > 0.0)) {
      throw Error(ErrorKind::InvalidInput, "tolerances must be positive");
    }
    if (!(margin >= 0.0)) throw Error(ErrorKind::InvalidInput, "margin must be nonnegative");
    if (multiplier_degree != 0) {
      throw Error(ErrorKind::InvalidInput, "only degree-0 SOS multipliers are supported");
    }
    if (!(sdp.gap_tol > 0.0) || !(sdp.feas_tol > 0.0) || sdp.max_iters < 1) {
      throw Error(ErrorKind::InvalidInput, "invalid SDP solver options");
    }
  }
};

namespace detail {

/// Basis of symmetric n x n matrices, one per (i <= j): E_ii or E_ij + E_ji.
inline std::vector<std::pair<int, int>> sym_index(int n) {
  std::vector<std::pair<int, int>> idx;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) idx.emplace_back(i, j);
  }
  return idx;
}

inline Matrix sym_unit(int n, int i, int j) {
  Matrix e = Matrix::Zero(n, n);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

inline SymMatrix assemble_sym(int n, const std::vector<int>& vars, const Vector& y) {
  Matrix m = Matrix::Zero(n, n);
  const auto idx = sym_index(n);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    m(idx[k].first, idx[k].second) = y(vars[k]);
    m(idx[k].second, idx[k].first) = y(vars[k]);
  }
  return SymMatrix(m);
}

inline void add_if_nonzero(SdpProblem& p, int block, int var, const Matrix& a) {
  if (a.cwiseAbs().maxCoeff() > 0.0) p.add_coefficient(block, var, a);
}

}  // namespace detail

struct Program9 {
  SdpProblem problem;
  int n = 0;
  std::vector<int> p_vars;
  std::vector<int> phat_vars;
  int l_var = -1;
  int sigma_var = -1;
  // block indices
  int containment_block = -1;
  int invariance_block = -1;
  int relaxation_block = -1;
  int sigma_block = -1;
  int definiteness_block = -1;
  int phat_cap_block = -1;  // -1 unless cfg.cap_phat
  double phat_cap = 0.0;

  SymMatrix P(const Vector& y) const { return detail::assemble_sym(n, p_vars, y); }
  SymMatrix Phat(const Vector& y) const { return detail::assemble_sym(n, phat_vars, y); }
  double l(const Vector& y) const { return y(l_var); }
  double sigma(const Vector& y) const { return y(sigma_var); }
};

/// Program 9 at fixed zeta.  zeta = 0 drops the Phat term from the invariance
/// block (open-loop case).
inline Program9 build_program9(const LinearSystem& sys, const QuadraticPolynomial& s, double zeta,
                               const SynthesisConfig& cfg) {
  sys.validate();
  validate_safe_set(s);
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) {
    throw Error(ErrorKind::InvalidInput, "zeta must be finite and nonnegative");
  }
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (s.dim() != n) throw Error(ErrorKind::InvalidInput, "safe set dimension differs from system");

  Program9 prog;
  prog.n = n;
  SdpProblem& p = prog.problem;
  const auto idx = detail::sym_index(n);
  for (auto [i, j] : idx) prog.p_vars.push_back(p.add_scalar("P" + std::to_string(i) + std::to_string(j)));
  for (auto [i, j] : idx) prog.phat_vars.push_back(p.add_scalar("Phat" + std::to_string(i) + std::to_string(j)));
  prog.l_var = p.add_scalar("l");
  prog.sigma_var = p.add_scalar("sigma");

  prog.containment_block = p.add_block(n + 1, "containment");
  prog.invariance_block = p.add_block(n, "relaxed_invariance");
  prog.relaxation_block = p.add_block(n + m, "schur_relaxation");
  prog.sigma_block = p.add_block(1, "sigma_nonneg");
  prog.definiteness_block = p.add_block(n, "P_lower_bound");

  // Containment Gram matrix is affine in (P, l, sigma); read its coefficients
  // off by probing the builder.
  const SymMatrix zero_n = SymMatrix::zero(n);
  const SosMultiplier no_sigma(0.0);
  const Matrix g0 = containment_gram(zero_n, 0.0, s, no_sigma, cfg.margin).matrix();
  p.set_constant(prog.containment_block, g0);
  p.add_coefficient(prog.containment_block, prog.l_var,
                    containment_gram(zero_n, 1.0, s, no_sigma, cfg.margin).matrix() - g0);
  p.add_coefficient(prog.containment_block, prog.sigma_var,
                    containment_gram(zero_n, 0.0, s, SosMultiplier(1.0), cfg.margin).matrix() - g0);

  Matrix relax_const = Matrix::Zero(n + m, n + m);
  relax_const.bottomRightCorner(m, m) = Matrix::Identity(m, m);
  p.set_constant(prog.relaxation_block, relax_const);
  p.set_constant(prog.definiteness_block, -cfg.eps_P * Matrix::Identity(n, n));

  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto [i, j] = idx[k];
    const Matrix e = detail::sym_unit(n, i, j);
    const int pv = prog.p_vars[k];
    const int hv = prog.phat_vars[k];

    detail::add_if_nonzero(p, prog.containment_block, pv,
                           containment_gram(SymMatrix(e), 0.0, s, no_sigma, cfg.margin).matrix() - g0);

    const Matrix ea = e * sys.A;
    detail::add_if_nonzero(p, prog.invariance_block, pv, -(ea + ea.transpose()));
    detail::add_if_nonzero(p, prog.invariance_block, hv, 2.0 * zeta * e);

    Matrix coupling = Matrix::Zero(n + m, n + m);
    coupling.topRightCorner(n, m) = e * sys.B;
    coupling.bottomLeftCorner(m, n) = (e * sys.B).transpose();
    detail::add_if_nonzero(p, prog.relaxation_block, pv, coupling);
    Matrix hat = Matrix::Zero(n + m, n + m);
    hat.topLeftCorner(n, n) = e;
    p.add_coefficient(prog.relaxation_block, hv, hat);

    p.add_coefficient(prog.definiteness_block, pv, e);
  }
  p.add_coefficient(prog.sigma_block, prog.sigma_var, Matrix::Identity(1, 1));

  if (cfg.cap_phat) {
    // ||P|| <= trace P = n, so Phat = c I meets both relaxed blocks whenever
    // c >= ||P B||^2 and 2 zeta c >= ||P A + A^T P||.
    const double a_norm = Eigen::JacobiSVD<Matrix>(sys.A).singularValues()(0);
    const double b_norm = Eigen::JacobiSVD<Matrix>(sys.B).singularValues()(0);
    prog.phat_cap = n * n * b_norm * b_norm + 1.0 + (zeta > 0.0 ? n * a_norm / zeta : 0.0);
    prog.phat_cap_block = p.add_block(n, "Phat_cap");
    p.set_constant(prog.phat_cap_block, prog.phat_cap * Matrix::Identity(n, n));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto [i, j] = idx[k];
      p.add_coefficient(prog.phat_cap_block, prog.phat_vars[k], -detail::sym_unit(n, i, j));
    }
  }

  std::map<int, double> trace;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k].first == idx[k].second) trace[prog.p_vars[k]] = 1.0;
  }
  p.add_equality(trace, static_cast<double>(n));
  p.set_objective(prog.l_var, 1.0);
  return prog;
}

struct Program10 {
  SdpProblem problem;
  int t_var = -1;
  int sigma2_var = -1;
};

/// Program 10 at fixed (P, l).  Throws ControlIneffective when P B B^T P^T = 0.
inline Program10 build_program10(const SymMatrix& P, double l, const LinearSystem& sys) {
  sys.validate();
  if (P.dim() != sys.state_dim()) throw Error(ErrorKind::InvalidInput, "P dimension differs from system");
  if (!(l > 0.0)) throw Error(ErrorKind::InvalidInput, "l must be positive");
  if (lambda_min(P) <= 0.0) throw Error(ErrorKind::InvalidInput, "P must be positive definite");
  const SymMatrix M = sys.input_gram(P);
  if (M.matrix().cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::ControlIneffective, "B^T P^T = 0: the input cannot affect b");
  }
  Program10 prog;
  SdpProblem& p = prog.problem;
  prog.t_var = p.add_scalar("t");
  prog.sigma2_var = p.add_scalar("sigma2");
  const int gram = p.add_block(P.dim() + 1, "input_bound");
  const int t_block = p.add_block(1, "t_nonneg");
  const int s_block = p.add_block(1, "sigma2_nonneg");

  const SosMultiplier none(0.0);
  const Matrix g0 = input_bound_gram(P, l, M, 0.0, none, sys.u_max).matrix();
  p.set_constant(gram, g0);
  p.add_coefficient(gram, prog.t_var, input_bound_gram(P, l, M, 1.0, none, sys.u_max).matrix() - g0);
  p.add_coefficient(gram, prog.sigma2_var,
                    input_bound_gram(P, l, M, 0.0, SosMultiplier(1.0), sys.u_max).matrix() - g0);
  p.add_coefficient(t_block, prog.t_var, Matrix::Identity(1, 1));
  p.add_coefficient(s_block, prog.sigma2_var, Matrix::Identity(1, 1));
  p.set_objective(prog.t_var, 1.0);
  return prog;
}

/// u_max / (l * lambda_max(P^{-1} P B B^T P^T)), the exact optimum of program 10.
inline double solve_program10_closed_form(const SymMatrix& P, double l, const LinearSystem& sys) {
  if (!(l > 0.0)) throw Error(ErrorKind::InvalidInput, "l must be positive");
  const SymMatrix M = sys.input_gram(P);
  const double lam = gen_eig_max(M, P);
  if (M.matrix().cwiseAbs().maxCoeff() == 0.0 || lam <= 0.0) {
    throw Error(ErrorKind::ControlIneffective, "B^T P^T = 0: program 10 is unbounded");
  }
  return sys.u_max / (l * lam);
}

/// K = -zeta B^T P^T
inline Controller extract_controller(const SymMatrix& P, double zeta, const LinearSystem& sys) {
  if (!(zeta >= 0.0)) throw Error(ErrorKind::InvalidInput, "zeta must be nonnegative");
  return {zeta, -zeta * sys.B.transpose() * P.matrix().transpose()};
}

/// Smallest zeta >= 0 with -PA - A^T P + 2 zeta PBB^T P^T >= 0, by bisection
/// (the left-hand side is monotone in zeta).  Empty when no finite zeta works.
inline std::optional<double> minimal_invariance_gain(const LinearSystem& sys, const SymMatrix& P,
                                                     double zeta_cap = 1e12) {
  auto ok = [&](double z) { return lambda_min(invariance_matrix(sys, P, z)) >= 0.0; };
  if (ok(0.0)) return 0.0;
  double hi = 1.0;
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > zeta_cap) return std::nullopt;
  }
  double lo = hi > 1.0 ? hi / 2.0 : 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

enum class SynthesisStatus { Feasible, Infeasible, Stalled, ControlIneffective };

inline const char* to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Feasible: return "Feasible";
    case SynthesisStatus::Infeasible: return "Infeasible";
    case SynthesisStatus::Stalled: return "Stalled";
    case SynthesisStatus::ControlIneffective: return "ControlIneffective";
  }
  return "Unknown";
}

struct IterationRecord {
  enum class Kind { Alternation, OpenLoop, Completion };
  Kind kind = Kind::Alternation;
  int index = 0;
  double zeta_in = 0.0;  // zeta used by program 9
  double l = 0.0;
  double sigma = 0.0;
  double t = 0.0;        // program 10 optimum (zeta_out^2)
  double t_oracle = 0.0;
  double t_rel_err = 0.0;
  double zeta_out = 0.0;
  double trace_P = 0.0;
  SdpStatus program9 = SdpStatus::NumericalFailure;
  std::optional<SdpStatus> program10;
  bool invariance_ok = false;
  bool containment_ok = false;
  bool control_ok = false;
  bool relaxed_ok = false;
  SymMatrix P;
  SymMatrix Phat;

  bool verified() const { return invariance_ok && containment_ok && control_ok && relaxed_ok; }
};

inline const char* to_string(IterationRecord::Kind k) {
  switch (k) {
    case IterationRecord::Kind::Alternation: return "alternation";
    case IterationRecord::Kind::OpenLoop: return "open_loop";
    case IterationRecord::Kind::Completion: return "completion";
  }
  return "unknown";
}

struct Certificate {
  Ellipsoid ellipsoid;
  Controller controller;
  RelaxationWitness witness;
};

struct SynthesisReport {
  SynthesisStatus status = SynthesisStatus::Stalled;
  std::vector<IterationRecord> history;
  std::optional<Certificate> final;
  int selected_iterate = -1;  // index into history
  bool controllable = true;
  // Per-run audits of the properties the alternation is expected to keep.
  bool normalization_ok = true;     // |trace P - n| <= 1e-7 at every iterate
  bool oracle_agreement_ok = true;  // program 10 matches closed form to 1e-6 rel
  bool monotone_l_ok = true;        // l nondecreasing wherever zeta is
  std::vector<std::string> notes;
};

/// Called with a tag such as "program9_iter0" and the problem, before solving.
using ProgramObserver = std::function<void(const std::string&, const SdpProblem&)>;

namespace detail {

inline void verify_iterate(IterationRecord& rec, const LinearSystem& sys,
                           const QuadraticPolynomial& s, const SynthesisConfig& cfg) {
  const double tol = cfg.verify_tol;
  rec.invariance_ok = check_invariance_condition(sys, rec.P, rec.zeta_out, tol);
  rec.relaxed_ok = check_relaxed_conditions(sys, rec.P, rec.Phat, rec.zeta_out, tol);
  if (!(rec.l > 0.0) || lambda_min(rec.P) < 1e-8) {
    rec.containment_ok = rec.control_ok = false;
    return;
  }
  const Ellipsoid ell(rec.P, rec.l);
  rec.containment_ok = check_containment(ell, s, tol);
  rec.control_ok = check_control_bound(ell, extract_controller(rec.P, rec.zeta_out, sys), sys, tol);
}

inline Certificate certificate_of(const IterationRecord& rec, const LinearSystem& sys) {
  return {Ellipsoid(rec.P, rec.l), extract_controller(rec.P, rec.zeta_out, sys), {rec.Phat}};
}

}  // namespace detail

inline SynthesisReport run(const LinearSystem& sys, const QuadraticPolynomial& s,
                           const SynthesisConfig& cfg, const ProgramObserver& observer = {}) {
  sys.validate();
  validate_safe_set(s);
  cfg.validate();
  if (s.dim() != sys.state_dim()) throw Error(ErrorKind::InvalidInput, "safe set dimension differs from system");

  SynthesisReport report;
  report.controllable = is_controllable(sys);
  if (!report.controllable) report.notes.push_back("(A, B) is not controllable");
  const int n = sys.state_dim();

  auto solve9 = [&](double zeta, const std::string& tag, IterationRecord& rec,
                    Program9& prog) -> bool {
    prog = build_program9(sys, s, zeta, cfg);
    if (observer) observer(tag, prog.problem);
    const SdpSolution sol = solve(prog.problem, cfg.sdp);
    rec.zeta_in = zeta;
    rec.program9 = sol.status;
    if (sol.status != SdpStatus::Optimal) return false;
    rec.P = prog.P(sol.y);
    rec.Phat = prog.Phat(sol.y);
    rec.l = prog.l(sol.y);
    rec.sigma = prog.sigma(sol.y);
    rec.trace_P = rec.P.trace();
    if (std::abs(rec.trace_P - n) > 1e-7) report.normalization_ok = false;
    return true;
  };

  // Program 10 at (rec.P, rec.l); fills t, oracle and zeta_out.
  auto solve10 = [&](const std::string& tag, IterationRecord& rec) -> bool {
    const Program10 prog = build_program10(rec.P, rec.l, sys);
    if (observer) observer(tag, prog.problem);
    const SdpSolution sol = solve(prog.problem, cfg.sdp);
    rec.program10 = sol.status;
    rec.t_oracle = solve_program10_closed_form(rec.P, rec.l, sys);
    if (sol.status != SdpStatus::Optimal) return false;
    rec.t = sol.y(prog.t_var);
    rec.t_rel_err = std::abs(rec.t - rec.t_oracle) / std::abs(rec.t_oracle);
    if (rec.t_rel_err > 1e-6) report.oracle_agreement_ok = false;
    rec.zeta_out = std::sqrt(std::max(0.0, rec.t));
    return true;
  };

  if (!sys.has_control_authority()) {
    // With B = 0 the only admissible gain is zero; the invariance block
    // reduces to -PA - A^T P >= 0.
    IterationRecord rec;
    rec.kind = IterationRecord::Kind::OpenLoop;
    Program9 prog;
    if (solve9(0.0, "program9_open_loop", rec, prog) && rec.l > 0.0) {
      rec.zeta_out = 0.0;
      detail::verify_iterate(rec, sys, s, cfg);
    }
    report.history.push_back(rec);
    if (rec.program9 == SdpStatus::Optimal && rec.verified()) {
      report.status = SynthesisStatus::Feasible;
      report.selected_iterate = 0;
      report.final = detail::certificate_of(rec, sys);
    } else {
      report.status = SynthesisStatus::ControlIneffective;
      report.notes.push_back("B = 0 and the open-loop system admits no invariant ellipsoid in S");
    }
    return report;
  }

  double zeta = cfg.zeta0;
  for (int k = 0; k < cfg.max_outer_iters; ++k) {
    IterationRecord rec;
    rec.index = k;
    Program9 prog;
    const bool ok9 = solve9(zeta, "program9_iter" + std::to_string(k), rec, prog);
    if (!ok9 || !(rec.l > 0.0)) {
      report.history.push_back(rec);
      if (k == 0) {
        report.status = SynthesisStatus::Infeasible;
        report.notes.push_back(std::string("program 9 at zeta0: ") + to_string(rec.program9) +
                               (ok9 ? " with l <= 0" : ""));
        return report;
      }
      report.notes.push_back("program 9 failed at iteration " + std::to_string(k));
      break;
    }
    const bool ok10 = solve10("program10_iter" + std::to_string(k), rec);
    if (ok10) detail::verify_iterate(rec, sys, s, cfg);
    if (!report.history.empty()) {
      const IterationRecord& prev = report.history.back();
      if (rec.zeta_in >= prev.zeta_in && rec.l < prev.l - 1e-7) report.monotone_l_ok = false;
    }
    report.history.push_back(rec);
    if (!ok10) {
      report.notes.push_back("program 10 failed at iteration " + std::to_string(k));
      break;
    }
    if (report.history.size() >= 2) {
      const double prev_l = report.history[report.history.size() - 2].l;
      if (std::abs(rec.l - prev_l) <= cfg.l_tol * std::max(1.0, std::abs(rec.l))) break;
    }
    zeta = rec.zeta_out;
  }

  auto select = [&](int i, SynthesisStatus st) {
    report.status = st;
    report.selected_iterate = i;
    report.final = detail::certificate_of(report.history[i], sys);
  };

  // Latest iterate that passes every exact check.
  for (int i = static_cast<int>(report.history.size()) - 1; i >= 0; --i) {
    if (report.history[i].verified()) {
      if (i + 1 != static_cast<int>(report.history.size())) {
        report.notes.push_back("rolled back to iterate " + std::to_string(i));
      }
      select(i, SynthesisStatus::Feasible);
      return report;
    }
  }

  // Completion: keep the last (P, l), raise zeta to the smallest gain that
  // satisfies the exact invariance condition and shrink l so program 10
  // admits it.
  for (int i = static_cast<int>(report.history.size()) - 1; i >= 0; --i) {
    const IterationRecord& base = report.history[i];
    if (base.program9 != SdpStatus::Optimal || !(base.l > 0.0)) continue;
    const auto zmin = minimal_invariance_gain(sys, base.P);
    if (!zmin) continue;
    const double zeta_target = *zmin * (1.0 + 1e-3) + 1e-9;
    const double lam = gen_eig_max(sys.input_gram(base.P), base.P);
    IterationRecord rec;
    rec.kind = IterationRecord::Kind::Completion;
    rec.index = static_cast<int>(report.history.size());
    rec.program9 = base.program9;
    rec.zeta_in = base.zeta_in;
    rec.P = base.P;
    rec.trace_P = base.trace_P;
    rec.sigma = base.sigma;
    rec.l = std::min(base.l, sys.u_max / (zeta_target * zeta_target * lam) * (1.0 - 1e-6));
    // Phat = P B B^T P^T meets the Schur block exactly; keep the program-9
    // witness when it still works at the new gain.
    rec.Phat = check_relaxed_conditions(sys, base.P, base.Phat, zeta_target, cfg.verify_tol)
                   ? base.Phat
                   : sys.input_gram(base.P);
    if (!solve10("program10_completion" + std::to_string(i), rec)) {
      report.history.push_back(rec);
      continue;
    }
    detail::verify_iterate(rec, sys, s, cfg);
    report.history.push_back(rec);
    if (rec.verified()) {
      report.notes.push_back("certificate completed from iterate " + std::to_string(i) +
                             " (minimal gain " + std::to_string(*zmin) + ")");
      select(rec.index, SynthesisStatus::Feasible);
      return report;
    }
    break;
  }

  report.status = SynthesisStatus::Stalled;
  report.notes.push_back("no iterate passes the exact invariance, containment and input checks");
  return report;
}

}  // namespace invforge

#endif  // INVFORGE_SYNTHESIS_HPP
