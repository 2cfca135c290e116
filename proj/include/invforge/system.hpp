#ifndef INVFORGE_SYSTEM_HPP
#define INVFORGE_SYSTEM_HPP

#include <cmath>
#include <string>

#include "invforge/errors.hpp"
#include "invforge/numerics.hpp"

namespace invforge {

/// x' = A x + B u with ||u||_2^2 <= u_max.
struct LinearSystem {
  Matrix A;
  Matrix B;
  double u_max = 1.0;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }

  void validate() const {
    if (A.rows() < 1 || A.rows() != A.cols()) {
      throw Error(ErrorKind::InvalidInput, "A must be square and non-empty");
    }
    if (B.rows() != A.rows() || B.cols() < 1) {
      throw Error(ErrorKind::InvalidInput, "B must have as many rows as A and at least one column");
    }
    if (!A.allFinite() || !B.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite A or B");
    if (!(u_max > 0.0) || !std::isfinite(u_max)) {
      throw Error(ErrorKind::InvalidInput, "u_max must be a positive finite scalar");
    }
  }

  bool has_control_authority() const { return B.cwiseAbs().maxCoeff() > 0.0; }

  /// PBB^T P^T, the quadratic form of ||B^T P x||^2.
  SymMatrix input_gram(const SymMatrix& P) const {
    const Matrix pb = P.matrix() * B;
    return SymMatrix(pb * pb.transpose(), 1e-9);
  }
};

/// rank [B, AB, ..., A^{n-1} B] == n
inline bool is_controllable(const LinearSystem& sys) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  Matrix ctrb(n, n * m);
  Matrix blk = sys.B;
  for (int i = 0; i < n; ++i) {
    ctrb.block(0, i * m, n, m) = blk;
    blk = sys.A * blk;
  }
  Eigen::JacobiSVD<Matrix> svd(ctrb);
  const double smax = svd.singularValues()(0);
  if (smax == 0.0) return false;
  const double tol = 1e-10 * smax * std::max(n, n * m);
  return (svd.singularValues().array() > tol).count() == n;
}

/// b(x) = -x^T P x + l; the certified set is {b >= 0}.
struct Ellipsoid {
  SymMatrix P;
  double l = 0.0;

  Ellipsoid() = default;
  Ellipsoid(SymMatrix p, double level) : P(std::move(p)), l(level) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorKind::InvalidInput, "l must be positive");
    if (lambda_min(P) < 1e-8) {
      throw Error(ErrorKind::InvalidInput, "P must be positive definite");
    }
  }

  int dim() const { return P.dim(); }
  double barrier(const Vector& x) const { return l - x.dot(P.matrix() * x); }
};

/// u = K x with K = -zeta B^T P^T.
struct Controller {
  double zeta = 0.0;
  Matrix K;

  Vector operator()(const Vector& x) const { return K * x; }
};

/// The P-hat matrix of the relaxed LMIs.
struct RelaxationWitness {
  SymMatrix Phat;
};

}  // namespace invforge

#endif  // INVFORGE_SYSTEM_HPP
