#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hetero_topo/errors.hpp"

namespace hetero_topo {

/// Nodes and weights for E[f(Z)], Z ~ N(0, 1): sum_i weights[i] f(nodes[i]).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

/// Gauss-Hermite rule with `points` nodes, rescaled from the e^{-x^2} weight
/// to the standard normal. Roots by Newton iteration on the orthonormal
/// Hermite recurrence with asymptotic initial guesses.
inline GaussRule gauss_hermite_normal(std::size_t points) {
  if (points == 0) throw InvalidArgument("quadrature needs at least one point");
  const int n = static_cast<int>(points);
  constexpr double pim4 = 0.7511255444649425;  // pi^(-1/4)
  constexpr int max_newton = 100;
  std::vector<double> x(points), w(points);
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
    double pp = 0.0;
    bool done = false;
    for (int it = 0; it < max_newton && !done; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      done = std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z));
    }
    if (!done) throw NoConvergence("Gauss-Hermite root", max_newton, 0.0, {z});
    x[static_cast<std::size_t>(i)] = z;
    x[static_cast<std::size_t>(n - 1 - i)] = -z;
    w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  }
  GaussRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  const double inv_sqrt_pi = 1.0 / std::sqrt(3.14159265358979323846);
  // Ascending order.
  for (std::size_t i = 0; i < points; ++i) {
    rule.nodes[i] = std::sqrt(2.0) * x[points - 1 - i];
    rule.weights[i] = w[points - 1 - i] * inv_sqrt_pi;
  }
  return rule;
}

/// Tensor-product rule on N(0, I_q): `points` as a flat q-major array of
/// `count` nodes, with matching weights.
struct TensorRule {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<double> points;
  std::vector<double> weights;
};

inline TensorRule tensor_gauss_hermite(std::size_t dim, std::size_t per_dim) {
  const GaussRule g = gauss_hermite_normal(per_dim);
  TensorRule t;
  t.dim = dim;
  t.count = 1;
  for (std::size_t d = 0; d < dim; ++d) t.count *= per_dim;
  t.points.resize(t.count * dim);
  t.weights.resize(t.count);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t c = 0; c < t.count; ++c) {
    double w = 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      t.points[c * dim + d] = g.nodes[idx[d]];
      w *= g.weights[idx[d]];
    }
    t.weights[c] = w;
    for (std::size_t d = 0; d < dim; ++d) {
      if (++idx[d] < per_dim) break;
      idx[d] = 0;
    }
  }
  return t;
}

/// Points per dimension so that per_dim^q stays near 4096, between 3 and 32.
inline std::size_t default_points_per_dim(std::size_t dim) {
  if (dim == 0) return 1;
  std::size_t p = 32;
  auto count = [dim](std::size_t per) {
    double c = 1.0;
    for (std::size_t d = 0; d < dim; ++d) c *= static_cast<double>(per);
    return c;
  };
  while (p > 3 && count(p) > 4096.0) --p;
  return p;
}

}  // namespace hetero_topo
