// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "invforge/invforge.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace invforge;
using namespace invforge::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int run_cli(const std::string& args, double* seconds = nullptr) {
  const std::string cmd = std::string("\"") + INVFORGE_CLI + "\" " + args + " > /dev/null 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int raw = std::system(cmd.c_str());
  if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string problem_path(const std::string& name) {
  return std::string(INVFORGE_SOURCE_DIR) + "/problems/" + name;
}

// lambda_max(P^{-1} M) from the generalized symmetric eigenproblem M v = lambda P v.
double gen_eig_oracle(const Matrix& m, const Matrix& p) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(m, p);
  return ges.eigenvalues().maxCoeff();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// 1. End-to-end run of the planar example through the CLI.
Outcome planar_example() {
  const fs::path out = fs::temp_directory_path() / "invforge_acceptance_planar";
  fs::remove_all(out);
  double seconds = 0.0;
  const int code = run_cli("synth \"" + problem_path("planar_example.json") + "\" --out \"" + out.string() +
                               "\" --simulate 100 10",
                           &seconds);
  if (code != 0) return {false, "synth exit code " + std::to_string(code)};
  const auto cert = read_certificate((out / "result.json").string());
  if (!cert) return {false, "result.json holds no certificate"};

  const LinearSystem sys = planar_system();
  const Matrix p = cert->ellipsoid.P.matrix();
  const double l = cert->ellipsoid.l;
  const double zeta = cert->controller.zeta;
  const Matrix pb = p * sys.B;
  const Matrix m = pb * pb.transpose();

  // (a) invariance
  const Matrix inv = -p * sys.A - sys.A.transpose() * p + 2.0 * zeta * m;
  const double a = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (inv + inv.transpose())).eigenvalues().minCoeff();
  // (b) containment in the unit disc
  const double b = l * gen_eig_oracle(Matrix::Identity(2, 2), p);
  // (c) input bound
  const double c = zeta * zeta * l * gen_eig_oracle(m, p);

  // (d) 100 uniform starts in the ellipsoid by rejection from its bounding box,
  // RK4 with dt = 1e-3 up to T = 10.
  Rng rng(777);
  const Matrix pinv = p.inverse();
  const Vector half = (l * pinv.diagonal()).cwiseSqrt();
  const Matrix acl = sys.A + sys.B * cert->controller.K;
  const double dt = 1e-3;
  double min_b = std::numeric_limits<double>::infinity();
  int started = 0;
  while (started < 100) {
    Vector x = Eigen::Vector2d(uniform(rng, -half(0), half(0)), uniform(rng, -half(1), half(1)));
    if (x.dot(p * x) > l) continue;
    ++started;
    for (int k = 0; k <= 10000; ++k) {
      min_b = std::min(min_b, l - x.dot(p * x));
      const Vector k1 = acl * x;
      const Vector k2 = acl * (x + 0.5 * dt * k1);
      const Vector k3 = acl * (x + 0.5 * dt * k2);
      const Vector k4 = acl * (x + dt * k3);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  const bool structural = std::abs(p.trace() - 2.0) <= 1e-7 && l > 0.0 && zeta > 0.0;
  const bool pass = structural && a >= -1e-6 && b <= 1.0 + 1e-6 && c <= 1.0 + 1e-6 && min_b >= -1e-6 &&
                    seconds < 30.0;
  return {pass, "lambda_min=" + num(a) + " l*lmax(P^-1)=" + num(b) + " max|u|^2=" + num(c) +
                    " min b=" + num(min_b) + " zeta=" + num(zeta) + " l=" + num(l) + " wall=" + num(seconds) + "s"};
}

// 2. Relaxed pair implies the exact condition, over the random generator.
Outcome relaxed_implies_exact() {
  Rng rng(2024);
  int counterexamples = 0;
  int draws = 0;
  double worst = 0.0;
  while (draws < 1000) {
    const RelaxedTuple t = sample_relaxed_tuple(rng, 1.0);
    if (!check_relaxed_conditions(t.sys, t.P, t.Phat, t.zeta, 1e-8)) continue;
    ++draws;
    if (!theorem1_check(t.sys, t.P, t.Phat, t.zeta)) {
      ++counterexamples;
      worst = std::min(worst, lambda_min(invariance_matrix(t.sys, t.P, t.zeta)));
    }
  }
  return {counterexamples == 0, std::to_string(counterexamples) + " counterexamples in " + std::to_string(draws) +
                                    " draws (worst lambda_min " + num(worst) + ")"};
}

// 3. Program 10 optimum against the generalized-eigenvalue closed form.
Outcome program10_oracle() {
  Rng rng(3);
  double worst = 0.0;
  int instances = 0;
  for (; instances < 60; ++instances) {
    const int n = uniform_int(rng, 1, 4);
    const int m = uniform_int(rng, 1, 4);
    LinearSystem sys;
    sys.A = random_matrix(rng, n, n);
    sys.B = random_matrix(rng, n, m);
    sys.u_max = uniform(rng, 1e-3, 4.0);
    const SymMatrix p = random_spd(rng, n);
    const double l = uniform(rng, 1e-3, 2.0);
    const Program10 prog = build_program10(p, l, sys);
    const SdpSolution s = solve(prog.problem);
    if (s.status != SdpStatus::Optimal) return {false, "instance " + std::to_string(instances) + ": " + to_string(s.status)};
    const Matrix pb = p.matrix() * sys.B;
    const double oracle = sys.u_max / (l * gen_eig_oracle(pb * pb.transpose(), p.matrix()));
    worst = std::max(worst, std::abs(s.y(prog.t_var) - oracle) / oracle);
  }
  return {worst <= 1e-6, std::to_string(instances) + " instances, worst relative error " + num(worst)};
}

// 4. Optimal l of program 9 is nondecreasing in zeta.
Outcome program9_monotone() {
  Rng rng(4);
  const SynthesisConfig cfg;
  double worst_drop = 0.0;
  int solved = 0;
  for (int sys_i = 0; sys_i < 20; ++sys_i) {
    const int n = uniform_int(rng, 1, 4);
    const LinearSystem sys = random_controllable_system(rng, n, uniform_int(rng, 1, n));
    const QuadraticPolynomial s(SymMatrix(-random_spd(rng, n, 0.3).matrix()), random_matrix(rng, n, 1, 0.3), 1.0);
    double prev = -std::numeric_limits<double>::infinity();
    for (double zeta : {0.05, 0.5, 5.0}) {
      const Program9 prog = build_program9(sys, s, zeta, cfg);
      const SdpSolution sol = solve(prog.problem, cfg.sdp);
      if (sol.status != SdpStatus::Optimal) {
        return {false, "system " + std::to_string(sys_i) + " zeta " + num(zeta) + ": " + to_string(sol.status) + " (" + sol.message + ")"};
      }
      ++solved;
      const double l = prog.l(sol.y);
      worst_drop = std::max(worst_drop, prev - l);
      prev = l;
    }
  }
  return {worst_drop <= 1e-7, std::to_string(solved) + " solves, largest decrease " + num(std::max(0.0, worst_drop))};
}

// 5. SDP solver on the worked examples and on diagonal programs.
Outcome sdp_correctness() {
  const SdpOptions opts;
  struct Case {
    const char* name;
    SdpProblem p;
    std::function<bool(const SdpSolution&)> value_ok;
  };
  std::vector<Case> cases;
  cases.push_back({"min-x", sdp_min_x_example(), [](const SdpSolution& s) { return std::abs(s.y(0) - 1.0) <= 1e-7; }});
  cases.push_back({"trace", sdp_trace_example(), [](const SdpSolution&) { return true; }});
  cases.push_back({"gain", sdp_t_example(), [](const SdpSolution& s) { return std::abs(s.y(0) - 2.0) <= 1e-7; }});
  double worst_res = 0.0;
  for (auto& c : cases) {
    const SdpSolution s = solve(c.p, opts);
    if (s.status != SdpStatus::Optimal) return {false, std::string(c.name) + ": " + to_string(s.status)};
    if (s.duality_gap > opts.gap_tol) return {false, std::string(c.name) + ": gap " + num(s.duality_gap)};
    const SdpResiduals r = residuals(c.p, s);
    worst_res = std::max({worst_res, r.primal_inf, r.dual_inf, r.gap});
    if (!c.value_ok(s)) return {false, std::string(c.name) + ": wrong optimum"};
  }
  if (worst_res > 1e-7) return {false, "residual " + num(worst_res)};

  Rng rng(5);
  double worst_lp = 0.0;
  for (int i = 0; i < 200; ++i) {
    const DiagonalInstance inst = random_diagonal_sdp(rng);
    const auto lp = lp_by_vertex_enumeration(inst.c, inst.H, inst.g);
    const SdpSolution s = solve(inst.problem, opts);
    if (!lp || s.status != SdpStatus::Optimal) return {false, "diagonal instance " + std::to_string(i)};
    worst_lp = std::max(worst_lp, std::abs(s.objective_value - *lp));
  }
  return {worst_lp <= 1e-7, "examples residual " + num(worst_res) + ", 200 diagonal programs, worst |sdp - lp| " +
                                num(worst_lp)};
}

// 6. Gram PSD verdict against dense-grid sign checks.
Outcome sos_exactness() {
  Rng rng(6);
  int disagreements = 0;
  int psd_count = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = uniform_int(rng, 1, 4);
    Matrix g;
    const Matrix r = random_matrix(rng, n + 1, n + 1);
    if (i % 2 == 0) {
      g = r * r.transpose() + 1e-3 * Matrix::Identity(n + 1, n + 1);
    } else {
      g = r + r.transpose();
    }
    const QuadraticPolynomial p(SymMatrix(g.bottomRightCorner(n, n)), 2.0 * g.block(1, 0, n, 1), g(0, 0));
    const bool sos = is_psd(gram_of_quadratic(p), 0.0);
    static constexpr int kPoints[] = {0, 2001, 201, 41, 21};
    const GridMinimum gm = quadratic_grid_minimum(p, kPoints[n]);
    psd_count += sos ? 1 : 0;
    const bool agree = sos ? gm.grid_min > 0.0 : gm.refined_min < 1e-6;
    disagreements += agree ? 0 : 1;
  }
  return {disagreements == 0, "500 quadratics (" + std::to_string(psd_count) + " SOS), " +
                                  std::to_string(disagreements) + " disagreements"};
}

// 7. Negative controls.
Outcome negative_controls() {
  const fs::path out = fs::temp_directory_path() / "invforge_acceptance_unstable";
  fs::remove_all(out);
  const int code = run_cli("synth \"" + problem_path("unstable_no_input.json") + "\" --out \"" + out.string() + "\"");

  const QuadraticPolynomial disc = unit_ball(2);
  const bool contained = check_containment(Ellipsoid(SymMatrix::identity(2), 2.0), disc, 1e-6);
  // No multiplier makes the containment Gram matrix PSD: an SDP in sigma alone.
  SdpProblem p;
  const int sigma = p.add_scalar("sigma");
  const int blk = p.add_block(3);
  const Matrix g0 = containment_gram(SymMatrix::identity(2), 2.0, disc, SosMultiplier(0.0)).matrix();
  p.set_constant(blk, g0);
  p.add_coefficient(blk, sigma, containment_gram(SymMatrix::identity(2), 2.0, disc, SosMultiplier(1.0)).matrix() - g0);
  p.add_coefficient(p.add_block(1), sigma, Matrix::Identity(1, 1));
  const SdpSolution s = solve(p);
  const bool pass = code == 2 && !contained && s.status == SdpStatus::Infeasible;
  return {pass, "unstable/no-input exit " + std::to_string(code) + ", containment(P=I, l=2) " +
                    (contained ? "passes" : "fails") + ", multiplier search " + to_string(s.status)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"1 planar example end to end", planar_example},
      {"2 relaxed pair implies exact invariance", relaxed_implies_exact},
      {"3 input-bound program matches closed form", program10_oracle},
      {"4 level set monotone in gain", program9_monotone},
      {"5 SDP solver correctness", sdp_correctness},
      {"6 SOS exactness", sos_exactness},
      {"7 negative controls", negative_controls},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.label << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criterion(s) failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
