// invforge: synthesize and re-check ellipsoidal controlled-invariant sets.
//
//   invforge synth <problem.json> [--out DIR] [--zeta0 R] [--max-iters N] [--tol R]
//                  [--plots] [--export-sdpa DIR] [--simulate N_TRAJ T]
//   invforge verify <result.json> <problem.json>
//
// Exit codes: 0 certificate found and verified, 2 no certificate, 1 error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "invforge/invforge.hpp"

namespace fs = std::filesystem;
using namespace invforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoCertificate = 2;
constexpr std::uint64_t kSampleSeed = 20240521;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("invforge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("INVFORGE_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring INVFORGE_LOG={} (expected error, info or debug)", v);
  }
}

std::string fmt_matrix(const Matrix& m) {
  std::string s;
  for (int r = 0; r < m.rows(); ++r) {
    s += "    [";
    for (int c = 0; c < m.cols(); ++c) s += (c ? ", " : "") + format_real(m(r, c));
    s += "]\n";
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  out << text;
}

std::string human_report(const SynthesisReport& report, const std::optional<CheckSummary>& checks,
                         const std::optional<SimulationSummary>& sim) {
  std::string s = "status: " + std::string(to_string(report.status)) + "\n";
  s += "controllable: " + std::string(report.controllable ? "yes" : "no") + "\n";
  s += "iterations:\n";
  for (const auto& h : report.history) {
    s += "  [" + std::to_string(h.index) + "] " + to_string(h.kind) + "  zeta_in=" + format_real(h.zeta_in) +
         "  l=" + format_real(h.l) + "  t=" + format_real(h.t) + "  t_oracle=" + format_real(h.t_oracle) +
         "  checks(inv,cont,ctrl,relax)=" + (h.invariance_ok ? "1" : "0") + (h.containment_ok ? "1" : "0") +
         (h.control_ok ? "1" : "0") + (h.relaxed_ok ? "1" : "0") + "\n";
  }
  if (report.final) {
    const auto& c = *report.final;
    s += "certificate (iterate " + std::to_string(report.selected_iterate) + "):\n  P =\n" +
         fmt_matrix(c.ellipsoid.P.matrix()) + "  l = " + format_real(c.ellipsoid.l) +
         "\n  zeta = " + format_real(c.controller.zeta) + "\n  K =\n" + fmt_matrix(c.controller.K);
  }
  if (checks) {
    s += "verification:\n  invariance: " + std::string(checks->invariance ? "pass" : "FAIL") +
         " (min eig " + format_real(checks->invariance_min_eig) + ")\n" +
         "  containment: " + (checks->containment ? "pass" : "FAIL") + "\n" +
         "  input bound: " + (checks->control_bound ? "pass" : "FAIL") + " (max ||u||^2 " +
         format_real(checks->max_input_sq) + ")\n" + "  relaxed LMIs: " + (checks->relaxed ? "pass" : "FAIL") +
         "\n";
  }
  if (sim) {
    s += "simulation: " + std::to_string(sim->trajectories) + " trajectories, dt=" + format_real(sim->dt) +
         ", T=" + format_real(sim->horizon) + ", min b=" + format_real(sim->min_barrier) +
         ", max ||u||^2=" + format_real(sim->max_input_sq) + (sim->diverged ? ", DIVERGED" : "") + "\n";
  }
  for (const auto& n : report.notes) s += "note: " + n + "\n";
  return s;
}

struct SynthArgs {
  std::string problem;
  std::string out = ".";
  std::optional<double> zeta0;
  std::optional<int> max_iters;
  std::optional<double> tol;
  bool plots = false;
  std::string export_sdpa;
  std::vector<double> simulate;
};

int run_synth(const SynthArgs& args) {
  ProblemSpec spec = parse_problem(args.problem);
  if (args.zeta0) spec.config.zeta0 = *args.zeta0;
  if (args.max_iters) spec.config.max_outer_iters = *args.max_iters;
  if (args.tol) spec.config.l_tol = *args.tol;
  spec.config.validate();
  spdlog::info("problem: n = {}, m = {}, u_max = {}", spec.system.state_dim(), spec.system.input_dim(),
               spec.system.u_max);

  ProgramObserver observer;
  if (!args.export_sdpa.empty()) {
    fs::create_directories(args.export_sdpa);
    observer = [&](const std::string& tag, const SdpProblem& p) {
      const fs::path path = fs::path(args.export_sdpa) / (tag + ".dat-s");
      write_sdpa_file(p, path.string(), tag);
      spdlog::debug("exported {}", path.string());
    };
  }

  const SynthesisReport report = invforge::run(spec.system, spec.safe_set, spec.config, observer);
  if (!report.controllable) spdlog::warn("(A, B) is not controllable");
  for (const auto& h : report.history) {
    spdlog::debug("iterate {} ({}): zeta_in={} l={} t={} t_oracle={}", h.index, to_string(h.kind), h.zeta_in,
                  h.l, h.t, h.t_oracle);
  }
  spdlog::info("synthesis status: {}", to_string(report.status));

  std::optional<CheckSummary> checks;
  std::optional<SimulationSummary> sim;
  bool ok = report.status == SynthesisStatus::Feasible && report.final.has_value();
  if (report.final) {
    checks = check_certificate(*report.final, spec.system, spec.safe_set);
    ok = ok && checks->all();
    if (!args.simulate.empty()) {
      SimulationSummary summary;
      summary.trajectories = static_cast<int>(args.simulate[0]);
      summary.horizon = args.simulate[1];
      const auto& cert = *report.final;
      const auto starts = sample_in_ellipsoid(cert.ellipsoid, summary.trajectories, kSampleSeed);
      summary.min_barrier = std::numeric_limits<double>::infinity();
      try {
        for (const auto& tr :
             simulate_batch(spec.system, cert.controller, cert.ellipsoid, starts, summary.dt, summary.horizon)) {
          summary.min_barrier = std::min(summary.min_barrier, tr.min_barrier());
          summary.max_input_sq = std::max(summary.max_input_sq, tr.max_input_sq);
          summary.starts_outside += tr.start_outside ? 1 : 0;
        }
      } catch (const DivergedError& e) {
        summary.diverged = true;
        spdlog::error("{}", e.what());
      }
      if (summary.trajectories == 0) summary.min_barrier = 0.0;
      ok = ok && !summary.diverged && summary.min_barrier >= -kVerifyTol;
      sim = summary;
    }
  }

  fs::create_directories(args.out);
  write_text(fs::path(args.out) / "result.json", result_json(report, checks, sim).dump(2) + "\n");
  write_text(fs::path(args.out) / "report.txt", human_report(report, checks, sim));
  spdlog::info("wrote {}", (fs::path(args.out) / "result.json").string());

  if (args.plots) {
    if (!report.final) {
      spdlog::warn("no certificate, skipping plot data");
    } else {
      try {
        for (const auto& f : emit_plot_data(report, spec.system, spec.safe_set, args.out)) {
          spdlog::info("wrote {}", f.string());
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnsupportedDimensionForPlots) throw;
        spdlog::warn("{}", e.what());
      }
    }
  }
  return ok ? kExitOk : kExitNoCertificate;
}

int run_verify(const std::string& result_path, const std::string& problem_path) {
  const ProblemSpec spec = parse_problem(problem_path);
  const auto cert = read_certificate(result_path);
  if (!cert) {
    spdlog::error("{} holds no certificate", result_path);
    return kExitNoCertificate;
  }
  if (cert->ellipsoid.dim() != spec.system.state_dim() || cert->controller.K.rows() != spec.system.input_dim()) {
    throw Error(ErrorKind::InvalidInput, "certificate dimensions do not match the problem");
  }
  const CheckSummary c = check_certificate(*cert, spec.system, spec.safe_set);
  std::cout << "invariance:   " << (c.invariance ? "pass" : "FAIL") << "  (min eig "
            << format_real(c.invariance_min_eig) << ")\n"
            << "containment:  " << (c.containment ? "pass" : "FAIL") << "\n"
            << "input bound:  " << (c.control_bound ? "pass" : "FAIL") << "  (max ||u||^2 "
            << format_real(c.max_input_sq) << ")\n"
            << "relaxed LMIs: " << (c.relaxed ? "pass" : "FAIL") << "\n";
  return c.all() ? kExitOk : kExitNoCertificate;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Ellipsoidal safe controlled-invariant set synthesis"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "synthesize a certificate for a problem file");
  synth_cmd->add_option("problem", synth.problem, "problem JSON file")->required();
  synth_cmd->add_option("--out", synth.out, "output directory");
  synth_cmd->add_option("--zeta0", synth.zeta0, "initial gain scalar");
  synth_cmd->add_option("--max-iters", synth.max_iters, "maximum alternation iterations");
  synth_cmd->add_option("--tol", synth.tol, "relative stagnation tolerance on l");
  synth_cmd->add_flag("--plots", synth.plots, "write CSV plot data (n = 2)");
  synth_cmd->add_option("--export-sdpa", synth.export_sdpa, "write every SDP in SDPA sparse format");
  synth_cmd->add_option("--simulate", synth.simulate, "closed-loop audit: N_TRAJ T")->expected(2);

  std::string result_path, problem_path;
  auto* verify_cmd = app.add_subcommand("verify", "re-check a stored certificate");
  verify_cmd->add_option("result", result_path, "result JSON file")->required();
  verify_cmd->add_option("problem", problem_path, "problem JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*synth_cmd) {
      if (!synth.simulate.empty() && (synth.simulate[0] < 0 || !(synth.simulate[1] > 0))) {
        throw Error(ErrorKind::InvalidInput, "--simulate needs N_TRAJ >= 0 and T > 0");
      }
      return run_synth(synth);
    }
    return run_verify(result_path, problem_path);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
}
