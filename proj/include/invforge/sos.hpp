#ifndef INVFORGE_SOS_HPP
#define INVFORGE_SOS_HPP

// Gram-matrix encodings of quadratic sum-of-squares conditions on the monomial
// basis z = (1, x_1, ..., x_n).  For degree-2 polynomials the Gram matrix on
// this basis is unique, so "G is PSD" is exactly "p is SOS" (= p >= 0).

#include <cmath>
#include <string>

#include "invforge/errors.hpp"
#include "invforge/numerics.hpp"

namespace invforge {

/// p(x) = x^T Q x + q^T x + c
struct QuadraticPolynomial {
  SymMatrix Q;
  Vector q;
  double c = 0.0;

  QuadraticPolynomial() = default;
  QuadraticPolynomial(SymMatrix quad, Vector lin, double constant)
      : Q(std::move(quad)), q(std::move(lin)), c(constant) {
    if (q.size() != Q.dim()) {
      throw Error(ErrorKind::InvalidInput, "linear part has length " + std::to_string(q.size()) +
                                               ", quadratic part is " + std::to_string(Q.dim()) +
                                               "x" + std::to_string(Q.dim()));
    }
    if (!q.allFinite() || !std::isfinite(c)) {
      throw Error(ErrorKind::InvalidInput, "non-finite polynomial coefficients");
    }
  }

  int dim() const { return Q.dim(); }
  double operator()(const Vector& x) const { return x.dot(Q.matrix() * x) + q.dot(x) + c; }
};

/// Degree-0 SOS multiplier, i.e. a nonnegative scalar.
class SosMultiplier {
 public:
  explicit SosMultiplier(double value = 0.0) : value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorKind::InvalidInput, "SOS multiplier must be a finite nonnegative scalar");
    }
  }
  double value() const { return value_; }

 private:
  double value_;
};

/// [[c, q^T/2], [q/2, Q]]
inline SymMatrix gram_of_quadratic(const QuadraticPolynomial& p) {
  const int n = p.dim();
  Matrix g(n + 1, n + 1);
  g(0, 0) = p.c;
  g.block(1, 0, n, 1) = 0.5 * p.q;
  g.block(0, 1, 1, n) = 0.5 * p.q.transpose();
  g.block(1, 1, n, n) = p.Q.matrix();
  return SymMatrix(g);
}

/// Throws InvalidInput unless the safe set {s >= 0} is a nonempty compact
/// ellipsoid, i.e. Q_s is negative definite and max s > 0.
inline void validate_safe_set(const QuadraticPolynomial& s) {
  if (lambda_max(s.Q) >= 0.0) {
    throw Error(ErrorKind::InvalidInput,
                "safe set must be compact: quadratic part Q_s has to be negative definite");
  }
  // max_x s(x) = c - q^T Q^{-1} q / 4
  const Vector center = -0.5 * s.Q.matrix().ldlt().solve(s.q);
  if (!(s(center) > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "safe set has empty interior");
  }
}

/// Gram matrix of x^T P x - l + sigma * s(x) (minus an optional margin on the
/// constant term).  PSD certifies {x^T P x <= l} is contained in {s >= 0}.
inline SymMatrix containment_gram(const SymMatrix& P, double l, const QuadraticPolynomial& s,
                                  const SosMultiplier& sigma, double margin = 0.0) {
  if (P.dim() != s.dim()) {
    throw Error(ErrorKind::InvalidInput, "P is " + std::to_string(P.dim()) +
                                             "-dimensional but the safe set is " +
                                             std::to_string(s.dim()) + "-dimensional");
  }
  const int n = P.dim();
  const double sg = sigma.value();
  Matrix g(n + 1, n + 1);
  g(0, 0) = sg * s.c - l - margin;
  g.block(1, 0, n, 1) = 0.5 * sg * s.q;
  g.block(0, 1, 1, n) = 0.5 * sg * s.q.transpose();
  g.block(1, 1, n, n) = P.matrix() + sg * s.Q.matrix();
  return SymMatrix(g);
}

/// Gram matrix of -t x^T M x - sigma2 (l - x^T P x) + u_max.  PSD certifies
/// t x^T M x <= u_max whenever x^T P x <= l.
inline SymMatrix input_bound_gram(const SymMatrix& P, double l, const SymMatrix& M, double t,
                                  const SosMultiplier& sigma2, double u_max) {
  if (P.dim() != M.dim()) throw Error(ErrorKind::InvalidInput, "P and M dimensions differ");
  const int n = P.dim();
  const double sg = sigma2.value();
  Matrix g = Matrix::Zero(n + 1, n + 1);
  g(0, 0) = u_max - sg * l;
  g.block(1, 1, n, n) = sg * P.matrix() - t * M.matrix();
  return SymMatrix(g);
}

}  // namespace invforge

#endif  // INVFORGE_SOS_HPP
