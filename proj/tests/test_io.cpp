#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "invforge/io.hpp"

namespace invforge {
namespace {

namespace fs = std::filesystem;
using namespace invforge::testing;

const std::string kProblems = std::string(INVFORGE_SOURCE_DIR) + "/problems/";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("invforge_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::InvalidInput;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string* header = nullptr) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(ParseProblem, PlanarExample) {
  const ProblemSpec spec = parse_problem(kProblems + "planar_example.json");
  EXPECT_EQ(spec.system.state_dim(), 2);
  EXPECT_EQ(spec.system.input_dim(), 2);
  EXPECT_EQ(spec.system.A, planar_system().A);
  EXPECT_EQ(spec.system.B, planar_system().B);
  EXPECT_EQ(spec.system.u_max, 1.0);
  EXPECT_EQ(spec.safe_set.Q.matrix(), -Matrix::Identity(2, 2));
  EXPECT_EQ(spec.safe_set.c, 1.0);
  EXPECT_EQ(spec.config.zeta0, 0.1);
  EXPECT_EQ(spec.config.max_outer_iters, 50);
}

TEST(ParseProblem, ErrorKinds) {
  EXPECT_EQ(kind_of([] { parse_problem_text(""); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_problem_text("{not json"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_problem(kProblems + "no_such_file.json"); }), ErrorKind::IoError);

  const std::string base = R"({"schema": 1,
    "system": {"A": [[0.8, 0.7], [-0.4, -0.6]], "B": [[1, 1], [1, 1]], "u_max": UMAX},
    "safe_set": {"Q": QS, "q": [0, 0], "c": 1} EXTRA})";
  auto make = [&](const std::string& umax, const std::string& qs, const std::string& extra = "") {
    std::string t = base;
    t.replace(t.find("UMAX"), 4, umax);
    t.replace(t.find("QS"), 2, qs);
    t.replace(t.find("EXTRA"), 5, extra);
    return t;
  };
  EXPECT_NO_THROW(parse_problem_text(make("1", "[[-1, 0], [0, -1]]")));
  EXPECT_EQ(kind_of([&] { parse_problem_text(make("-1", "[[-1, 0], [0, -1]]")); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { parse_problem_text(make("1", "[[1, 0], [0, -1]]")); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([&] { parse_problem_text(make("\"one\"", "[[-1, 0], [0, -1]]")); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_problem_text(make("1", "[[-1, 0], [0]]")); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_problem_text(make("1", "[[-1, 0], [0, -1]]", ", \"config\": {\"bogus\": 1}")); }),
            ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_problem_text(make("1", "[[-1, 0], [0, -1]]", ", \"config\": {\"zeta0\": -1}")); }),
            ErrorKind::InvalidInput);

  try {
    parse_problem_text(make("\"one\"", "[[-1, 0], [0, -1]]"));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("system.u_max"), std::string::npos) << e.what();
  }
  std::string no_schema = make("1", "[[-1, 0], [0, -1]]");
  no_schema.replace(no_schema.find("\"schema\": 1,"), 12, "");
  EXPECT_EQ(kind_of([&] { parse_problem_text(no_schema); }), ErrorKind::ParseError);
}

TEST(ParseProblem, RoundTripIsExact) {
  Rng rng(61);
  for (const char* name : {"planar_example.json", "offset_disc.json", "stable_no_input.json"}) {
    const ProblemSpec a = parse_problem(kProblems + name);
    const ProblemSpec b = parse_problem_text(write_problem(a));
    EXPECT_EQ(a.system.A, b.system.A) << name;
    EXPECT_EQ(a.system.B, b.system.B) << name;
    EXPECT_EQ(a.system.u_max, b.system.u_max) << name;
    EXPECT_EQ(a.safe_set.Q.matrix(), b.safe_set.Q.matrix()) << name;
    EXPECT_EQ(a.safe_set.q, b.safe_set.q) << name;
    EXPECT_EQ(a.safe_set.c, b.safe_set.c) << name;
    EXPECT_EQ(a.config.zeta0, b.config.zeta0) << name;
    EXPECT_EQ(a.config.max_outer_iters, b.config.max_outer_iters) << name;
    EXPECT_EQ(a.config.margin, b.config.margin) << name;
    EXPECT_EQ(a.config.sdp.gap_tol, b.config.sdp.gap_tol) << name;
    EXPECT_EQ(write_problem(a), write_problem(b)) << name;
  }
  ProblemSpec odd = parse_problem(kProblems + "planar_example.json");
  odd.system.A = random_matrix(rng, 2, 2) / 3.0;
  odd.system.u_max = std::acos(-1.0) / 7.0;
  odd.config.zeta0 = 1.0 / 3.0;
  const ProblemSpec back = parse_problem_text(write_problem(odd));
  EXPECT_EQ(back.system.A, odd.system.A);
  EXPECT_EQ(back.system.u_max, odd.system.u_max);
  EXPECT_EQ(back.config.zeta0, odd.config.zeta0);
}

TEST(ResultFile, CertificateRoundTrip) {
  const ProblemSpec spec = parse_problem(kProblems + "planar_example.json");
  const SynthesisReport report = run(spec.system, spec.safe_set, spec.config);
  ASSERT_TRUE(report.final.has_value());
  const CheckSummary checks = check_certificate(*report.final, spec.system, spec.safe_set);
  EXPECT_TRUE(checks.all());
  const auto cert = read_certificate_text(result_json(report, checks, std::nullopt).dump(2));
  ASSERT_TRUE(cert.has_value());
  EXPECT_EQ(cert->ellipsoid.P.matrix(), report.final->ellipsoid.P.matrix());
  EXPECT_EQ(cert->ellipsoid.l, report.final->ellipsoid.l);
  EXPECT_EQ(cert->controller.zeta, report.final->controller.zeta);
  EXPECT_EQ(cert->controller.K, report.final->controller.K);
  EXPECT_TRUE(check_certificate(*cert, spec.system, spec.safe_set).all());

  SynthesisReport none;
  none.status = SynthesisStatus::Stalled;
  EXPECT_FALSE(read_certificate_text(result_json(none, std::nullopt, std::nullopt).dump()).has_value());
}

SynthesisReport report_with(const SymMatrix& p, double l, double zeta, const LinearSystem& sys) {
  SynthesisReport r;
  r.status = SynthesisStatus::Feasible;
  r.final = Certificate{Ellipsoid(p, l), extract_controller(p, zeta, sys), {sys.input_gram(p)}};
  return r;
}

TEST(PlotData, UnitEllipse) {
  const fs::path dir = scratch_dir("unit");
  const LinearSystem sys = planar_system();
  const auto files = emit_plot_data(report_with(SymMatrix::identity(2), 1.0, 0.3, sys), sys, unit_ball(2), dir);
  ASSERT_EQ(files.size(), 4u);
  std::string header;
  const auto rows = read_csv(dir / "ellipse.csv", &header);
  EXPECT_EQ(header, "x1,x2");
  ASSERT_EQ(rows.size(), 512u);
  for (const auto& r : rows) {
    const double x = std::strtod(r[0].c_str(), nullptr), y = std::strtod(r[1].c_str(), nullptr);
    EXPECT_LE(std::abs(x * x + y * y - 1.0), 1e-10);
  }
  EXPECT_EQ(read_csv(dir / "safeset.csv").size(), 512u);
  EXPECT_EQ(read_csv(dir / "vector_field.csv").size(), 625u);
  EXPECT_EQ(read_csv(dir / "u_levels.csv").size(), 625u);
}

TEST(PlotData, NumbersReparseExactly) {
  const fs::path dir = scratch_dir("exact");
  const LinearSystem sys = planar_system();
  const SymMatrix p(mat(2, 2, {1.3, 0.2, 0.2, 0.7}));
  emit_plot_data(report_with(p, 1.0 / 3.0, 0.7, sys), sys, unit_ball(2), dir);
  const std::vector<Vector> pts = ellipse_boundary(p, 1.0 / 3.0, Vector::Zero(2));
  const auto rows = read_csv(dir / "ellipse.csv");
  ASSERT_EQ(rows.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(std::strtod(rows[i][0].c_str(), nullptr), pts[i](0));
    EXPECT_EQ(std::strtod(rows[i][1].c_str(), nullptr), pts[i](1));
  }
  const Matrix acl = sys.A + sys.B * extract_controller(p, 0.7, sys).K;
  for (const auto& r : read_csv(dir / "vector_field.csv")) {
    const Vector x = Eigen::Vector2d(std::strtod(r[0].c_str(), nullptr), std::strtod(r[1].c_str(), nullptr));
    const Vector dx = acl * x;
    EXPECT_EQ(std::strtod(r[2].c_str(), nullptr), dx(0));
    EXPECT_EQ(std::strtod(r[3].c_str(), nullptr), dx(1));
  }
}

TEST(PlotData, PlanarCertificateInsideSafeSet) {
  const fs::path dir = scratch_dir("planar");
  const ProblemSpec spec = parse_problem(kProblems + "planar_example.json");
  const SynthesisReport report = run(spec.system, spec.safe_set, spec.config);
  ASSERT_EQ(report.status, SynthesisStatus::Feasible);
  emit_plot_data(report, spec.system, spec.safe_set, dir);
  for (const auto& r : read_csv(dir / "ellipse.csv")) {
    const Vector x = Eigen::Vector2d(std::strtod(r[0].c_str(), nullptr), std::strtod(r[1].c_str(), nullptr));
    EXPECT_GE(spec.safe_set(x), -1e-6);
  }
  for (const auto& r : read_csv(dir / "safeset.csv")) {
    const Vector x = Eigen::Vector2d(std::strtod(r[0].c_str(), nullptr), std::strtod(r[1].c_str(), nullptr));
    EXPECT_NEAR(spec.safe_set(x), 0.0, 1e-12);
  }
}

TEST(PlotData, OffCenterSafeSetBoundary) {
  const fs::path dir = scratch_dir("offset");
  const ProblemSpec spec = parse_problem(kProblems + "offset_disc.json");
  const LinearSystem& sys = spec.system;
  emit_plot_data(report_with(SymMatrix::identity(2), 0.1, 0.1, sys), sys, spec.safe_set, dir);
  for (const auto& r : read_csv(dir / "safeset.csv")) {
    const Vector x = Eigen::Vector2d(std::strtod(r[0].c_str(), nullptr), std::strtod(r[1].c_str(), nullptr));
    EXPECT_NEAR(spec.safe_set(x), 0.0, 1e-12);
  }
}

TEST(PlotData, ZeroGainGivesZeroInputLevels) {
  const fs::path dir = scratch_dir("zero");
  const LinearSystem sys = planar_system();
  emit_plot_data(report_with(SymMatrix::identity(2), 0.5, 0.0, sys), sys, unit_ball(2), dir);
  for (const auto& r : read_csv(dir / "u_levels.csv")) EXPECT_EQ(std::strtod(r[2].c_str(), nullptr), 0.0);
}

TEST(PlotData, OnlyPlanarSystems) {
  LinearSystem sys;
  sys.A = -Matrix::Identity(3, 3);
  sys.B = Matrix::Identity(3, 1);
  EXPECT_EQ(kind_of([&] {
              emit_plot_data(report_with(SymMatrix::identity(3), 0.5, 0.0, sys), sys, unit_ball(3),
                             scratch_dir("three"));
            }),
            ErrorKind::UnsupportedDimensionForPlots);
}

}  // namespace
}  // namespace invforge
