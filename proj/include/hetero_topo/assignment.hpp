#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/mixing.hpp"

namespace hetero_topo {

/// Bijection on {0, ..., n-1}; mapping()[i] is the column assigned to row i.
/// Serialized 1-based.
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
    std::vector<bool> seen(mapping_.size(), false);
    for (std::size_t c : mapping_) {
      if (c >= mapping_.size() || seen[c]) throw InvalidArgument("mapping is not a bijection");
      seen[c] = true;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = i;
    return Permutation(std::move(m));
  }

  /// From 1-based indices as written in traces.
  static Permutation from_one_based(const std::vector<std::size_t>& one_based) {
    std::vector<std::size_t> m;
    m.reserve(one_based.size());
    for (std::size_t v : one_based) {
      if (v == 0) throw InvalidArgument("1-based permutation contains 0");
      m.push_back(v - 1);
    }
    return Permutation(std::move(m));
  }

  std::size_t n() const noexcept { return mapping_.size(); }
  std::size_t operator[](std::size_t i) const noexcept { return mapping_[i]; }
  const std::vector<std::size_t>& mapping() const noexcept { return mapping_; }

  std::vector<std::size_t> one_based() const {
    std::vector<std::size_t> out(mapping_);
    for (auto& v : out) ++v;
    return out;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

struct AssignmentResult {
  Permutation permutation;
  double cost;  // sum_i C(i, sigma(i)), summed in row order
};

/// Sum of C(i, sigma(i)) in row order.
inline double assignment_cost(const Matrix& cost, const Permutation& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) s += cost(i, p[i]);
  return s;
}

/// Minimum-cost perfect matching on a dense square cost matrix. Hungarian
/// method with row/column potentials and shortest augmenting paths, O(n^3).
/// Any optimal permutation may be returned when several tie.
inline AssignmentResult solve_assignment(const Matrix& cost) {
  if (!cost.square()) throw DimensionMismatch("assignment cost matrix must be square");
  const std::size_t n = cost.rows();
  if (n == 0) throw DimensionMismatch("assignment needs n >= 1");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(cost(i, j))) throw NonFiniteCost(i, j);

  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = 0;
  // 1-based internally; index 0 is the virtual root row/column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match_col(n + 1, none), way(n + 1, none);
  std::vector<bool> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    match_col[0] = row;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match_col[j0];
      double delta = inf;
      std::size_t j1 = none;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != none);
    do {
      const std::size_t j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> mapping(n);
  for (std::size_t j = 1; j <= n; ++j) mapping[match_col[j] - 1] = j - 1;
  Permutation p(std::move(mapping));
  const double c = assignment_cost(cost, p);
  return {std::move(p), c};
}

/// 0/1 permutation matrix with P(i, sigma(i)) = 1.
inline MixingMatrix to_matrix(const Permutation& p) {
  Matrix m(p.n(), p.n());
  for (std::size_t i = 0; i < p.n(); ++i) m(i, p[i]) = 1.0;
  return MixingMatrix::validate(std::move(m), 0.0);
}

}  // namespace hetero_topo
