#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/rng.hpp"

namespace hetero_topo {

/// n x K row-stochastic matrix of per-node label proportions,
/// entry (i, k) = P_i(Y = k).
class ClassProportions {
 public:
  static ClassProportions validate(Matrix pi, double tol = 1e-9) {
    if (pi.rows() == 0 || pi.cols() == 0) throw DimensionMismatch("class proportions need n >= 1 and K >= 1");
    for (std::size_t i = 0; i < pi.rows(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < pi.cols(); ++k) {
        const double v = pi(i, k);
        if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-12) throw NegativeEntry(i, k, v);
        s += v;
      }
      if (std::abs(s - 1.0) > tol) throw RowSumViolation(i, s - 1.0);
    }
    return ClassProportions(std::move(pi));
  }

  std::size_t n() const noexcept { return pi_.rows(); }
  std::size_t classes() const noexcept { return pi_.cols(); }
  double operator()(std::size_t i, std::size_t k) const noexcept { return pi_(i, k); }
  const Matrix& matrix() const noexcept { return pi_; }

  /// Column means: the global class marginal (1/n) sum_j pi_jk.
  std::vector<double> class_means() const {
    std::vector<double> m(classes(), 0.0);
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t k = 0; k < classes(); ++k) m[k] += pi_(i, k);
    for (double& v : m) v /= static_cast<double>(n());
    return m;
  }

  /// Row i as a vector (the label marginal of node i).
  std::vector<double> node(std::size_t i) const {
    auto r = pi_.row(i);
    return {r.begin(), r.end()};
  }

 private:
  explicit ClassProportions(Matrix pi) : pi_(std::move(pi)) {}
  Matrix pi_;
};

/// Each row ~ Dirichlet(alpha * 1_K), drawn from the row's own stream via
/// normalized Gamma(alpha, 1) variates.
inline ClassProportions dirichlet_proportions(std::size_t n, std::size_t classes, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw InvalidArgument("Dirichlet concentration must be positive");
  if (n == 0 || classes == 0) throw InvalidArgument("dirichlet_proportions needs n, K >= 1");
  Matrix pi(n, classes);
  for (std::size_t i = 0; i < n; ++i) {
    StreamRng rng(seed, StreamDomain::dirichlet, i);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      pi(i, k) = gamma(rng);
      total += pi(i, k);
    }
    if (!(total > 0.0)) {
      // Every draw underflowed; fall back to the symmetric mean.
      for (std::size_t k = 0; k < classes; ++k) pi(i, k) = 1.0 / static_cast<double>(classes);
      continue;
    }
    for (std::size_t k = 0; k < classes; ++k) pi(i, k) /= total;
  }
  return ClassProportions::validate(std::move(pi));
}

/// K classes split evenly: node i holds only class i mod K.
inline ClassProportions one_class_per_node(std::size_t n, std::size_t classes) {
  if (classes == 0 || n % classes != 0) throw InvalidArgument("one_class_per_node needs K dividing n");
  Matrix pi(n, classes);
  for (std::size_t i = 0; i < n; ++i) pi(i, i % classes) = 1.0;
  return ClassProportions::validate(std::move(pi));
}

inline ClassProportions homogeneous_proportions(std::size_t n, const std::vector<double>& marginal) {
  Matrix pi(n, marginal.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < marginal.size(); ++k) pi(i, k) = marginal[k];
  return ClassProportions::validate(std::move(pi));
}

}  // namespace hetero_topo
