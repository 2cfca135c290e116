#ifndef INVFORGE_NUMERICS_HPP
#define INVFORGE_NUMERICS_HPP

// Dense symmetric kernels shared by every other module.  Dimensions in this
// project stay at desk scale (tens), so everything is dense and eager.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "invforge/errors.hpp"

namespace invforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real symmetric matrix.  Construction symmetrizes (M + M^T)/2 but rejects
/// input whose asymmetry exceeds `asym_tol` relative to its largest entry.
class SymMatrix {
 public:
  static constexpr double kDefaultAsymmetryTol = 1e-12;

  SymMatrix() : data_(Matrix::Identity(1, 1)) {}

  explicit SymMatrix(const Matrix& m, double asym_tol = kDefaultAsymmetryTol) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
      throw Error(ErrorKind::InvalidMatrix,
                  "expected a non-empty square matrix, got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw Error(ErrorKind::InvalidMatrix, "non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > asym_tol * scale) {
      throw Error(ErrorKind::InvalidMatrix,
                  "asymmetry " + std::to_string(asym) + " exceeds tolerance");
    }
    data_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  int dim() const { return static_cast<int>(data_.rows()); }
  double operator()(int i, int j) const { return data_(i, j); }
  const Matrix& matrix() const { return data_; }

  SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(data_ + o.data_); }
  SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(data_ - o.data_); }
  SymMatrix operator*(double s) const { return SymMatrix(data_ * s); }
  friend SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

  double trace() const { return data_.trace(); }
  /// Spectral norm.
  double norm() const;

 private:
  Matrix data_;
};

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

/// Tridiagonalization + implicit symmetric QR (Eigen's SelfAdjointEigenSolver).
inline SymEig sym_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidMatrix, "eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double SymMatrix::norm() const {
  const SymEig e = sym_eig(*this);
  return std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
}

inline double lambda_min(const SymMatrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m.matrix(), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

inline double lambda_max(const SymMatrix& m) {
  const Vector ev =
      Eigen::SelfAdjointEigenSolver<Matrix>(m.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
  return ev(ev.size() - 1);
}

/// true iff lambda_min(m) >= -tol.
inline bool is_psd(const SymMatrix& m, double tol) { return lambda_min(m) >= -tol; }

/// Lower-triangular L with L L^T = m + shift*I.
inline Matrix cholesky_psd(const SymMatrix& m, double shift = 0.0) {
  const int n = m.dim();
  Matrix shifted = m.matrix() + shift * Matrix::Identity(n, n);
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
  }
  return llt.matrixL();
}

struct GenEigMax {
  double value = 0.0;
  Vector direction;  // x maximizing x^T M x / x^T P x, normalized to x^T P x = 1
};

/// Largest lambda with det(M - lambda P) = 0, by whitening with P = L L^T.
/// Also returns the maximizing direction.
inline GenEigMax gen_eig_max_with_direction(const SymMatrix& m, const SymMatrix& p) {
  if (m.dim() != p.dim()) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  const Matrix l = cholesky_psd(p, 0.0);
  const auto tri = l.triangularView<Eigen::Lower>();
  // L^{-1} M L^{-T}
  Matrix tmp = tri.solve(m.matrix());
  Matrix whitened = tri.solve(tmp.transpose());
  const SymEig e = sym_eig(SymMatrix(whitened, 1e-8));
  const int last = static_cast<int>(e.values.size()) - 1;
  GenEigMax out;
  out.value = std::max(0.0, e.values(last));
  out.direction = l.transpose().triangularView<Eigen::Upper>().solve(e.vectors.col(last));
  return out;
}

inline double gen_eig_max(const SymMatrix& m, const SymMatrix& p) {
  return gen_eig_max_with_direction(m, p).value;
}

}  // namespace invforge

#endif  // INVFORGE_NUMERICS_HPP
