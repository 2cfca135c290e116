#ifndef INVFORGE_IO_HPP
#define INVFORGE_IO_HPP

// Problem / result JSON files and CSV plot data for the command-line tool.
//
// Problem file (schema 1):
//   {
//     "schema": 1,
//     "system":   { "A": [[...], ...], "B": [[...], ...], "u_max": 1.0 },
//     "safe_set": { "Q": [[...], ...], "q": [...], "c": 1.0 },
//     "config":   { "zeta0": 0.1, ... }            // optional, any subset
//   }

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "invforge/errors.hpp"
#include "invforge/numerics.hpp"
#include "invforge/sdpa.hpp"
#include "invforge/sos.hpp"
#include "invforge/synthesis.hpp"
#include "invforge/system.hpp"
#include "invforge/verify.hpp"

namespace invforge {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ProblemSpec {
  LinearSystem system;
  QuadraticPolynomial safe_set;
  SynthesisConfig config;
};

namespace detail {

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw Error(ErrorKind::ParseError, path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::ParseError, path + "." + key + ": missing");
  return *it;
}

inline double read_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw Error(ErrorKind::ParseError, path + ": expected a number");
  return j.get<double>();
}

inline int read_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw Error(ErrorKind::ParseError, path + ": expected an integer");
  return j.get<int>();
}

inline Vector read_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, path + ": expected an array");
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<int>(i)) = read_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Matrix read_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorKind::ParseError, path + ": expected a non-empty array of rows");
  }
  const auto rows = static_cast<int>(j.size());
  Matrix m;
  for (int r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Vector row = read_vector(j[r], rp);
    if (r == 0) {
      if (row.size() == 0) throw Error(ErrorKind::ParseError, rp + ": empty row");
      m.resize(rows, row.size());
    } else if (row.size() != m.cols()) {
      throw Error(ErrorKind::ParseError, rp + ": expected " + std::to_string(m.cols()) + " entries");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_json(const Vector& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline void read_config(const Json& j, SynthesisConfig& cfg) {
  const std::string path = "config";
  if (!j.is_object()) throw Error(ErrorKind::ParseError, path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    if (key == "zeta0") cfg.zeta0 = read_number(value, p);
    else if (key == "max_outer_iters") cfg.max_outer_iters = read_int(value, p);
    else if (key == "l_tol") cfg.l_tol = read_number(value, p);
    else if (key == "psd_tol") cfg.psd_tol = read_number(value, p);
    else if (key == "eps_P") cfg.eps_P = read_number(value, p);
    else if (key == "margin") cfg.margin = read_number(value, p);
    else if (key == "verify_tol") cfg.verify_tol = read_number(value, p);
    else if (key == "multiplier_degree") cfg.multiplier_degree = read_int(value, p);
    else if (key == "cap_phat") {
      if (!value.is_boolean()) throw Error(ErrorKind::ParseError, p + ": expected a boolean");
      cfg.cap_phat = value.get<bool>();
    } else if (key == "gap_tol") cfg.sdp.gap_tol = read_number(value, p);
    else if (key == "feas_tol") cfg.sdp.feas_tol = read_number(value, p);
    else if (key == "max_sdp_iters") cfg.sdp.max_iters = read_int(value, p);
    else throw Error(ErrorKind::ParseError, p + ": unknown key");
  }
}

inline Json config_json(const SynthesisConfig& cfg) {
  return Json{{"zeta0", cfg.zeta0},
              {"max_outer_iters", cfg.max_outer_iters},
              {"l_tol", cfg.l_tol},
              {"psd_tol", cfg.psd_tol},
              {"eps_P", cfg.eps_P},
              {"margin", cfg.margin},
              {"verify_tol", cfg.verify_tol},
              {"multiplier_degree", cfg.multiplier_degree},
              {"cap_phat", cfg.cap_phat},
              {"gap_tol", cfg.sdp.gap_tol},
              {"feas_tol", cfg.sdp.feas_tol},
              {"max_sdp_iters", cfg.sdp.max_iters}};
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
}

}  // namespace detail

/// Parses and validates a problem from JSON text.  Omitted config keys keep
/// their defaults.
inline ProblemSpec parse_problem_text(const std::string& text, const std::string& origin = "<text>") {
  const Json j = detail::parse_json_text(text, origin);
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "top level: expected an object");
  const int schema = detail::read_int(detail::require(j, "schema", "$"), "$.schema");
  if (schema != kSchemaVersion) {
    throw Error(ErrorKind::ParseError, "$.schema: unsupported version " + std::to_string(schema));
  }
  ProblemSpec spec;
  const Json& sys = detail::require(j, "system", "$");
  spec.system.A = detail::read_matrix(detail::require(sys, "A", "system"), "system.A");
  spec.system.B = detail::read_matrix(detail::require(sys, "B", "system"), "system.B");
  spec.system.u_max = detail::read_number(detail::require(sys, "u_max", "system"), "system.u_max");
  spec.system.validate();

  const Json& ss = detail::require(j, "safe_set", "$");
  const Matrix q_mat = detail::read_matrix(detail::require(ss, "Q", "safe_set"), "safe_set.Q");
  const Vector q_vec = detail::read_vector(detail::require(ss, "q", "safe_set"), "safe_set.q");
  const double c = detail::read_number(detail::require(ss, "c", "safe_set"), "safe_set.c");
  if (q_mat.rows() != q_mat.cols()) throw Error(ErrorKind::InvalidInput, "safe_set.Q: must be square");
  try {
    spec.safe_set = QuadraticPolynomial(SymMatrix(q_mat), q_vec, c);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidInput, std::string("safe_set: ") + e.what());
  }
  if (spec.safe_set.dim() != spec.system.state_dim()) {
    throw Error(ErrorKind::InvalidInput, "safe_set: dimension differs from system.A");
  }
  validate_safe_set(spec.safe_set);

  if (auto it = j.find("config"); it != j.end()) detail::read_config(*it, spec.config);
  spec.config.validate();
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "schema" && key != "system" && key != "safe_set" && key != "config") {
      throw Error(ErrorKind::ParseError, "$." + key + ": unknown key");
    }
  }
  return spec;
}

inline ProblemSpec parse_problem(const std::string& path) {
  return parse_problem_text(detail::read_text(path), path);
}

inline std::string write_problem(const ProblemSpec& spec) {
  Json j{{"schema", kSchemaVersion},
         {"system",
          {{"A", detail::matrix_json(spec.system.A)},
           {"B", detail::matrix_json(spec.system.B)},
           {"u_max", spec.system.u_max}}},
         {"safe_set",
          {{"Q", detail::matrix_json(spec.safe_set.Q.matrix())},
           {"q", detail::vector_json(spec.safe_set.q)},
           {"c", spec.safe_set.c}}},
         {"config", detail::config_json(spec.config)}};
  return j.dump(2) + "\n";
}

struct CheckSummary {
  bool invariance = false;
  bool containment = false;
  bool control_bound = false;
  bool relaxed = false;
  double invariance_min_eig = 0.0;
  double containment_value = 0.0;  // l * lambda_max(P^-1 (-Q_s)) for centered sets
  double max_input_sq = 0.0;

  bool all() const { return invariance && containment && control_bound && relaxed; }
};

/// Re-derives every certificate check from scratch (no SDP involved).
inline CheckSummary check_certificate(const Certificate& cert, const LinearSystem& sys,
                                      const QuadraticPolynomial& s, double tol = kVerifyTol) {
  CheckSummary c;
  const SymMatrix& P = cert.ellipsoid.P;
  const double zeta = cert.controller.zeta;
  c.invariance_min_eig = lambda_min(invariance_matrix(sys, P, zeta));
  c.invariance = c.invariance_min_eig >= -tol;
  c.containment = check_containment(cert.ellipsoid, s, tol);
  if (s.q.cwiseAbs().maxCoeff() == 0.0) {
    c.containment_value = cert.ellipsoid.l * gen_eig_max(SymMatrix(-s.Q.matrix()), P);
  }
  c.max_input_sq = max_control_effort(cert.ellipsoid, cert.controller);
  c.control_bound = c.max_input_sq <= sys.u_max + tol;
  c.relaxed = check_relaxed_conditions(sys, P, cert.witness.Phat, zeta, tol);
  return c;
}

struct SimulationSummary {
  int trajectories = 0;
  double dt = 1e-3;
  double horizon = 10.0;
  double min_barrier = 0.0;
  double max_input_sq = 0.0;
  int starts_outside = 0;
  bool diverged = false;
};

inline Json result_json(const SynthesisReport& report, const std::optional<CheckSummary>& checks,
                        const std::optional<SimulationSummary>& sim) {
  Json j{{"schema", kSchemaVersion}, {"status", to_string(report.status)}};
  j["controllable"] = report.controllable;
  j["audits"] = {{"normalization_ok", report.normalization_ok},
                 {"oracle_agreement_ok", report.oracle_agreement_ok},
                 {"monotone_l_ok", report.monotone_l_ok}};
  if (report.final) {
    const Certificate& c = *report.final;
    j["certificate"] = {{"P", detail::matrix_json(c.ellipsoid.P.matrix())},
                        {"l", c.ellipsoid.l},
                        {"zeta", c.controller.zeta},
                        {"K", detail::matrix_json(c.controller.K)},
                        {"Phat", detail::matrix_json(c.witness.Phat.matrix())},
                        {"selected_iterate", report.selected_iterate}};
  } else {
    j["certificate"] = nullptr;
  }
  if (checks) {
    j["checks"] = {{"invariance", checks->invariance},
                   {"invariance_min_eig", checks->invariance_min_eig},
                   {"containment", checks->containment},
                   {"control_bound", checks->control_bound},
                   {"max_input_sq", checks->max_input_sq},
                   {"relaxed", checks->relaxed}};
  }
  if (sim) {
    j["simulation"] = {{"trajectories", sim->trajectories},
                       {"dt", sim->dt},
                       {"horizon", sim->horizon},
                       {"min_barrier", sim->min_barrier},
                       {"max_input_sq", sim->max_input_sq},
                       {"starts_outside", sim->starts_outside},
                       {"diverged", sim->diverged}};
  }
  Json hist = Json::array();
  for (const auto& h : report.history) {
    Json rec{{"kind", to_string(h.kind)},
             {"index", h.index},
             {"zeta_in", h.zeta_in},
             {"l", h.l},
             {"sigma", h.sigma},
             {"t", h.t},
             {"t_oracle", h.t_oracle},
             {"t_rel_err", h.t_rel_err},
             {"zeta_out", h.zeta_out},
             {"trace_P", h.trace_P},
             {"program9", to_string(h.program9)},
             {"invariance_ok", h.invariance_ok},
             {"containment_ok", h.containment_ok},
             {"control_ok", h.control_ok},
             {"relaxed_ok", h.relaxed_ok}};
    rec["program10"] = h.program10 ? Json(to_string(*h.program10)) : Json(nullptr);
    hist.push_back(std::move(rec));
  }
  j["history"] = std::move(hist);
  j["notes"] = report.notes;
  return j;
}

/// Loads the certificate stored in a result file.  Returns nullopt when the
/// run produced none.
inline std::optional<Certificate> read_certificate_text(const std::string& text,
                                                        const std::string& origin = "<text>") {
  const Json j = detail::parse_json_text(text, origin);
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "top level: expected an object");
  const int schema = detail::read_int(detail::require(j, "schema", "$"), "$.schema");
  if (schema != kSchemaVersion) throw Error(ErrorKind::ParseError, "$.schema: unsupported version");
  const Json& c = detail::require(j, "certificate", "$");
  if (c.is_null()) return std::nullopt;
  const Matrix p = detail::read_matrix(detail::require(c, "P", "certificate"), "certificate.P");
  const double l = detail::read_number(detail::require(c, "l", "certificate"), "certificate.l");
  const double zeta = detail::read_number(detail::require(c, "zeta", "certificate"), "certificate.zeta");
  const Matrix k = detail::read_matrix(detail::require(c, "K", "certificate"), "certificate.K");
  const Matrix phat = detail::read_matrix(detail::require(c, "Phat", "certificate"), "certificate.Phat");
  if (p.rows() != p.cols() || phat.rows() != p.rows() || phat.cols() != p.cols() || k.cols() != p.rows()) {
    throw Error(ErrorKind::ParseError, "certificate: inconsistent matrix shapes");
  }
  return Certificate{Ellipsoid(SymMatrix(p), l), Controller{zeta, k}, RelaxationWitness{SymMatrix(phat)}};
}

inline std::optional<Certificate> read_certificate(const std::string& path) {
  return read_certificate_text(detail::read_text(path), path);
}

// ---------------------------------------------------------------------------
// Plot data (planar systems only).

inline constexpr int kBoundaryPoints = 512;
inline constexpr int kGridSize = 25;

/// Points x = sqrt(l) L^{-T} (cos th, sin th) on {x^T P x = l}, P = L L^T.
inline std::vector<Vector> ellipse_boundary(const SymMatrix& P, double l, const Vector& center,
                                            int count = kBoundaryPoints) {
  const Matrix lt = cholesky_psd(P).transpose();
  std::vector<Vector> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * i / count;
    const Vector u = Eigen::Vector2d(std::cos(th), std::sin(th));
    pts.push_back(center + std::sqrt(l) * lt.triangularView<Eigen::Upper>().solve(u));
  }
  return pts;
}

struct SafeSetGeometry {
  Vector center;     // maximizer of s
  SymMatrix shape;   // s(x) = 0  <=>  (x - center)^T shape (x - center) = level
  double level = 0.0;
};

inline SafeSetGeometry safe_set_geometry(const QuadraticPolynomial& s) {
  SafeSetGeometry g;
  g.center = -0.5 * s.Q.matrix().ldlt().solve(s.q);
  g.shape = SymMatrix(-s.Q.matrix());
  g.level = s(g.center);
  return g;
}

namespace detail {

inline void write_csv(const std::filesystem::path& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_real(row[i]);
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::IoError, "write to " + path.string() + " failed");
}

}  // namespace detail

/// Writes ellipse.csv, safeset.csv, vector_field.csv and u_levels.csv.
inline std::vector<std::filesystem::path> emit_plot_data(const SynthesisReport& report,
                                                         const LinearSystem& sys,
                                                         const QuadraticPolynomial& s,
                                                         const std::filesystem::path& outdir) {
  if (!report.final) throw Error(ErrorKind::InvalidInput, "plot data needs a certificate");
  if (sys.state_dim() != 2) {
    throw Error(ErrorKind::UnsupportedDimensionForPlots,
                "plots need n = 2, got n = " + std::to_string(sys.state_dim()));
  }
  std::filesystem::create_directories(outdir);
  const Certificate& cert = *report.final;
  std::vector<std::filesystem::path> files;

  std::vector<std::vector<double>> rows;
  for (const Vector& x : ellipse_boundary(cert.ellipsoid.P, cert.ellipsoid.l, Vector::Zero(2))) {
    rows.push_back({x(0), x(1)});
  }
  files.push_back(outdir / "ellipse.csv");
  detail::write_csv(files.back(), "x1,x2", rows);

  const SafeSetGeometry geo = safe_set_geometry(s);
  rows.clear();
  for (const Vector& x : ellipse_boundary(geo.shape, geo.level, geo.center)) rows.push_back({x(0), x(1)});
  files.push_back(outdir / "safeset.csv");
  detail::write_csv(files.back(), "x1,x2", rows);

  // Bounding box of the safe set: half-widths sqrt(level * (shape^{-1})_ii).
  const Matrix shape_inv = geo.shape.matrix().inverse();
  const Vector half = (geo.level * shape_inv.diagonal()).cwiseSqrt();
  const Matrix acl = sys.A + sys.B * cert.controller.K;
  std::vector<std::vector<double>> field, levels;
  for (int i = 0; i < kGridSize; ++i) {
    for (int j = 0; j < kGridSize; ++j) {
      const double fx = -1.0 + 2.0 * i / (kGridSize - 1);
      const double fy = -1.0 + 2.0 * j / (kGridSize - 1);
      const Vector x = geo.center + Eigen::Vector2d(fx * half(0), fy * half(1));
      const Vector dx = acl * x;
      field.push_back({x(0), x(1), dx(0), dx(1)});
      levels.push_back({x(0), x(1), cert.controller(x).squaredNorm()});
    }
  }
  files.push_back(outdir / "vector_field.csv");
  detail::write_csv(files.back(), "x1,x2,dx1,dx2", field);
  files.push_back(outdir / "u_levels.csv");
  detail::write_csv(files.back(), "x1,x2,u_sq", levels);
  return files;
}

}  // namespace invforge

#endif  // INVFORGE_IO_HPP
