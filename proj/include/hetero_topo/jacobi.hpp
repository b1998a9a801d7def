#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/matrix.hpp"

namespace hetero_topo {

struct JacobiOptions {
  double tol = 1e-10;
  std::size_t max_sweeps = 100;
  // Columns with squared norm at or below this count as zero. Callers that
  // know the scale of the data the input was computed from set it.
  double zero_norm_sq = 0.0;
};

/// Singular values of `m` (descending) by one-sided (Hestenes) Jacobi.
///
/// Each rotation of a column pair is the Jacobi rotation that zeroes the
/// corresponding off-diagonal entry of M^T M, so the sweeps diagonalize M^T M
/// without ever forming it; on exit the squared column norms are its
/// eigenvalues. Working on M directly keeps null-space singular values at
/// rounding level instead of at sqrt(rounding).
inline std::vector<double> singular_values_jacobi(const Matrix& m, const JacobiOptions& opt = {}) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  // Column-major working copy: cols_[j] is column j.
  std::vector<std::vector<double>> c(cols, std::vector<double>(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) c[j][i] = m(i, j);

  // Columns below rounding level of the whole matrix count as zero; their
  // mutual angles are noise and would never settle under the relative test.
  double total = 0.0;
  for (const auto& col : c) total += norm_sq(col);
  const double eps = std::numeric_limits<double>::epsilon();
  const double negligible = std::max(opt.zero_norm_sq, eps * eps * total);

  bool converged = false;
  for (std::size_t sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < cols; ++p)
      for (std::size_t q = p + 1; q < cols; ++q) {
        const double alpha = norm_sq(c[p]);
        const double beta = norm_sq(c[q]);
        const double gamma = dot(c[p], c[q]);
        if (gamma == 0.0 || alpha <= negligible || beta <= negligible) continue;
        if (std::abs(gamma) <= opt.tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double a = c[p][i];
          const double b = c[q][i];
          c[p][i] = cs * a - sn * b;
          c[q][i] = sn * a + cs * b;
        }
      }
  }
  if (!converged) throw NoConvergence("one-sided Jacobi SVD", opt.max_sweeps, 0.0, {});

  std::vector<double> sv(cols);
  for (std::size_t j = 0; j < cols; ++j) sv[j] = std::sqrt(norm_sq(c[j]));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

inline double nuclear_norm(const Matrix& m, const JacobiOptions& opt = {}) {
  double s = 0.0;
  for (double v : singular_values_jacobi(m, opt)) s += v;
  return s;
}

}  // namespace hetero_topo
