#ifndef INVFORGE_TESTS_FIXTURES_HPP
#define INVFORGE_TESTS_FIXTURES_HPP

// Small hand-built problems shared by the unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "invforge/sdp.hpp"
#include "invforge/sos.hpp"
#include "invforge/system.hpp"
#include "oracles.hpp"

namespace invforge::testing {

inline Matrix mat(int rows, int cols, std::initializer_list<double> values) {
  Matrix m(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

inline LinearSystem planar_system() {
  LinearSystem sys;
  sys.A = mat(2, 2, {0.8, 0.7, -0.4, -0.6});
  sys.B = mat(2, 2, {1, 1, 1, 1});
  sys.u_max = 1.0;
  return sys;
}

inline QuadraticPolynomial unit_ball(int n) {
  return QuadraticPolynomial(SymMatrix(-Matrix::Identity(n, n)), Vector::Zero(n), 1.0);
}

// min x  s.t.  [[x, 1], [1, x]] >= 0, written as max -x.  Optimum x = 1.
inline SdpProblem sdp_min_x_example() {
  SdpProblem p;
  const int x = p.add_scalar("x");
  const int blk = p.add_block(2);
  p.set_constant(blk, mat(2, 2, {0, 1, 1, 0}));
  p.add_coefficient(blk, x, Matrix::Identity(2, 2));
  p.set_objective(x, -1.0);
  return p;
}

// max 0  s.t.  X >= 0 (2x2), trace X = 1.
inline SdpProblem sdp_trace_example() {
  SdpProblem p;
  const int x11 = p.add_scalar("x11");
  const int x12 = p.add_scalar("x12");
  const int x22 = p.add_scalar("x22");
  const int blk = p.add_block(2);
  p.add_coefficient(blk, x11, mat(2, 2, {1, 0, 0, 0}));
  p.add_coefficient(blk, x12, mat(2, 2, {0, 1, 1, 0}));
  p.add_coefficient(blk, x22, mat(2, 2, {0, 0, 0, 1}));
  p.add_equality({{x11, 1.0}, {x22, 1.0}}, 1.0);
  return p;
}

// max scale*t  s.t.  sigma I - t I >= 0 (2x2), sigma <= 2, sigma >= 0, t >= 0.  Optimum t = 2.
inline SdpProblem sdp_t_example(double scale = 1.0) {
  SdpProblem p;
  const int t = p.add_scalar("t");
  const int sigma = p.add_scalar("sigma");
  const int gram = p.add_block(2);
  p.add_coefficient(gram, sigma, Matrix::Identity(2, 2));
  p.add_coefficient(gram, t, -Matrix::Identity(2, 2));
  const int cap = p.add_block(1);
  p.set_constant(cap, Matrix::Constant(1, 1, 2.0));
  p.add_coefficient(cap, sigma, Matrix::Constant(1, 1, -1.0));
  p.add_coefficient(p.add_block(1), sigma, Matrix::Identity(1, 1));
  p.add_coefficient(p.add_block(1), t, Matrix::Identity(1, 1));
  p.set_objective(t, scale);
  return p;
}

// Random SDP whose blocks are all diagonal, so it is the linear program
// max c^T y  s.t.  g + H y >= 0.  y = 0 is strictly feasible (g > 0) and a
// box |y_i| <= bound keeps the feasible set bounded.
struct DiagonalInstance {
  SdpProblem problem;
  Vector c;
  Matrix H;
  Vector g;
};

inline DiagonalInstance random_diagonal_sdp(Rng& rng) {
  DiagonalInstance inst;
  const int nv = uniform_int(rng, 1, 3);
  const int nblocks = uniform_int(rng, 1, 3);
  std::vector<int> dims;
  int rows = 2 * nv;
  for (int k = 0; k < nblocks; ++k) {
    dims.push_back(uniform_int(rng, 1, 3));
    rows += dims.back();
  }
  inst.c = random_matrix(rng, nv, 1);
  inst.H = Matrix::Zero(rows, nv);
  inst.g = Vector::Zero(rows);
  int r = 0;
  for (int d : dims) {
    inst.H.block(r, 0, d, nv) = random_matrix(rng, d, nv);
    for (int i = 0; i < d; ++i) inst.g(r + i) = uniform(rng, 0.2, 2.0);
    r += d;
  }
  const double bound = uniform(rng, 1.0, 5.0);
  for (int i = 0; i < nv; ++i) {
    inst.H(r, i) = 1.0;
    inst.g(r++) = bound;
    inst.H(r, i) = -1.0;
    inst.g(r++) = bound;
  }

  SdpProblem& p = inst.problem;
  for (int i = 0; i < nv; ++i) p.add_scalar();
  r = 0;
  dims.push_back(2 * nv);
  for (int d : dims) {
    const int blk = p.add_block(d);
    p.set_constant(blk, inst.g.segment(r, d).asDiagonal().toDenseMatrix());
    for (int j = 0; j < nv; ++j) {
      const Vector col = inst.H.col(j).segment(r, d);
      if (col.cwiseAbs().maxCoeff() > 0.0) p.add_coefficient(blk, j, col.asDiagonal().toDenseMatrix());
    }
    r += d;
  }
  for (int j = 0; j < nv; ++j) p.set_objective(j, inst.c(j));
  return inst;
}

}  // namespace invforge::testing

#endif  // INVFORGE_TESTS_FIXTURES_HPP
