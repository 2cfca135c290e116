#ifndef INVFORGE_SDPA_HPP
#define INVFORGE_SDPA_HPP

// Export of an SdpProblem to the sparse SDPA text format (.dat-s).
//
// SDPA solves  min c^T x  s.t.  sum_i F_i x_i - F_0 >= 0.  Our problems read
// max b^T y  s.t.  C_k + sum_j y_j A_{k,j} >= 0,  E y = f,  so x = y,
// c = -b, F_0 = -C and F_i = A_i.  Equalities become one trailing LP (diagonal)
// block holding the pair  e_i^T y - f_i >= 0  and  f_i - e_i^T y >= 0.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "invforge/errors.hpp"
#include "invforge/sdp.hpp"

namespace invforge {

/// 17 significant digits; strtod on the output reproduces the double exactly.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_sdpa(const SdpProblem& p, std::ostream& out, const std::string& comment = {}) {
  p.validate();
  const int m = p.num_scalars();
  const int neq = static_cast<int>(p.equalities().size());
  const int nblocks = p.num_blocks() + (neq > 0 ? 1 : 0);

  out << "\"" << (comment.empty() ? "invforge export" : comment) << "\n";
  out << m << "\n" << nblocks << "\n";
  for (int k = 0; k < p.num_blocks(); ++k) out << p.blocks()[k].dim << (k + 1 < nblocks ? " " : "");
  if (neq > 0) out << -2 * neq;
  out << "\n";
  const Vector b = p.objective();
  for (int i = 0; i < m; ++i) out << format_real(-b(i)) << (i + 1 < m ? " " : "");
  out << "\n";

  auto emit = [&](int mat, int blk, const Matrix& a, double sign) {
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = i; j < a.cols(); ++j) {
        if (a(i, j) != 0.0) {
          out << mat << " " << blk << " " << i + 1 << " " << j + 1 << " "
              << format_real(sign * a(i, j)) << "\n";
        }
      }
    }
  };
  for (int k = 0; k < p.num_blocks(); ++k) {
    const auto& blk = p.blocks()[k];
    emit(0, k + 1, blk.constant, -1.0);
    for (const auto& [var, a] : blk.coefficients) emit(var + 1, k + 1, a, 1.0);
  }
  if (neq > 0) {
    const int lp = p.num_blocks() + 1;
    for (int i = 0; i < neq; ++i) {
      const auto& eq = p.equalities()[i];
      const int up = 2 * i + 1;
      const int down = 2 * i + 2;
      if (eq.rhs != 0.0) {
        out << 0 << " " << lp << " " << up << " " << up << " " << format_real(eq.rhs) << "\n";
        out << 0 << " " << lp << " " << down << " " << down << " " << format_real(-eq.rhs) << "\n";
      }
      for (const auto& [var, coef] : eq.coefficients) {
        if (coef == 0.0) continue;
        out << var + 1 << " " << lp << " " << up << " " << up << " " << format_real(coef) << "\n";
        out << var + 1 << " " << lp << " " << down << " " << down << " " << format_real(-coef) << "\n";
      }
    }
  }
}

inline void write_sdpa_file(const SdpProblem& p, const std::string& path,
                            const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
  write_sdpa(p, out, comment);
  if (!out) throw Error(ErrorKind::IoError, "write to " + path + " failed");
}

}  // namespace invforge

#endif  // INVFORGE_SDPA_HPP
