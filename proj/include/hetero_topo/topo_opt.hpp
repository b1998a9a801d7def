#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "hetero_topo/assignment.hpp"
#include "hetero_topo/errors.hpp"
#include "hetero_topo/jacobi.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/mixing.hpp"
#include "hetero_topo/proportions.hpp"

namespace hetero_topo {

inline constexpr double kDefaultLambda = 0.1;

/// g(W) = (1/n)||W Pi - 1 mean^T||_F^2 + (lambda/n)||W - 11^T/n||_F^2.
class TopoObjective {
 public:
  TopoObjective(ClassProportions pi, double lambda) : pi_(std::move(pi)), lambda_(lambda) {
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw InvalidArgument("lambda must be a positive finite real");
    means_ = pi_.class_means();
  }

  const ClassProportions& proportions() const noexcept { return pi_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t n() const noexcept { return pi_.n(); }
  std::size_t classes() const noexcept { return pi_.classes(); }
  const std::vector<double>& class_means() const noexcept { return means_; }

 private:
  ClassProportions pi_;
  double lambda_;
  std::vector<double> means_;
};

namespace detail {

inline void check_dims(const MixingMatrix& w, const ClassProportions& pi) {
  if (w.n() != pi.n()) throw DimensionMismatch("mixing matrix n differs from proportions row count");
}

// R = W Pi - 1 mean^T (n x K).
inline Matrix neighborhood_residual(const Matrix& w, const ClassProportions& pi, const std::vector<double>& means) {
  Matrix r = matmul(w, pi.matrix());
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t k = 0; k < r.cols(); ++k) r(i, k) -= means[k];
  return r;
}

inline Matrix minus_uniform(const Matrix& w) {
  Matrix d = w;
  const double u = 1.0 / static_cast<double>(w.rows());
  for (double& v : d.data()) v -= u;
  return d;
}

// Sum over k ascending, then i, of R(i, k)^2.
inline double column_major_sq(const Matrix& r) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.cols(); ++k)
    for (std::size_t i = 0; i < r.rows(); ++i) s += r(i, k) * r(i, k);
  return s;
}

}  // namespace detail

/// (1/n) sum_k sum_i (sum_j W_ij pi_jk - mean_k)^2. The bias part of g and,
/// scaled by K B, the bias part of the label-skew bound; both call this.
inline double neighborhood_bias(const MixingMatrix& w, const ClassProportions& pi) {
  detail::check_dims(w, pi);
  const Matrix r = detail::neighborhood_residual(w.matrix(), pi, pi.class_means());
  return detail::column_major_sq(r) / static_cast<double>(w.n());
}

inline double g_value(const MixingMatrix& w, const TopoObjective& obj) {
  detail::check_dims(w, obj.proportions());
  const double n = static_cast<double>(w.n());
  const double bias = neighborhood_bias(w, obj.proportions());
  return bias + obj.lambda() / n * frob_dist_to_uniform(w);
}

/// Bias part only (lambda = 0); used where lambda must be exactly zero, which
/// TopoObjective forbids.
inline double g_value_bias_only(const MixingMatrix& w, const ClassProportions& pi) {
  return neighborhood_bias(w, pi);
}

/// (2/n)(W Pi - 1 mean^T) Pi^T + (2 lambda/n)(W - 11^T/n).
inline Matrix g_gradient(const MixingMatrix& w, const TopoObjective& obj) {
  detail::check_dims(w, obj.proportions());
  const std::size_t n = w.n();
  const std::size_t kk = obj.classes();
  const double nn = static_cast<double>(n);
  const Matrix r = detail::neighborhood_residual(w.matrix(), obj.proportions(), obj.class_means());
  const Matrix& pi = obj.proportions().matrix();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < kk; ++k) s += r(i, k) * pi(j, k);
      g(i, j) = 2.0 / nn * s + 2.0 * obj.lambda() / nn * (w(i, j) - 1.0 / nn);
    }
  return g;
}

inline constexpr double kLineSearchDegenerate = 1e-15;

/// Exact minimizer over gamma in [0, 1] of g((1 - gamma) W + gamma P). g is
/// quadratic along the segment, so the stationary point is closed form.
inline double line_search(const MixingMatrix& w, const MixingMatrix& p, const TopoObjective& obj) {
  detail::check_dims(w, obj.proportions());
  if (p.n() != w.n()) throw DimensionMismatch("line search endpoints differ in n");
  const Matrix d = p.matrix() - w.matrix();
  const Matrix r = detail::neighborhood_residual(w.matrix(), obj.proportions(), obj.class_means());
  const Matrix dpi = matmul(d, obj.proportions().matrix());
  const double lambda = obj.lambda();
  const double denom = detail::column_major_sq(dpi) + lambda * frobenius_sq(d);
  if (denom < kLineSearchDegenerate) return 0.0;
  double cross = 0.0;
  for (std::size_t k = 0; k < r.cols(); ++k)
    for (std::size_t i = 0; i < r.rows(); ++i) cross += r(i, k) * dpi(i, k);
  const double numer = -(cross + lambda * frobenius_dot(detail::minus_uniform(w.matrix()), d));
  return std::clamp(numer / denom, 0.0, 1.0);
}

/// (1/n) || (I - 11^T/n) Pi Pi^T ||_*, the data-dependent constant of the
/// Frank-Wolfe rate bound.
inline double proportions_nuclear_term(const ClassProportions& pi) {
  const std::size_t n = pi.n();
  const Matrix& p = pi.matrix();
  const std::vector<double> means = pi.class_means();
  Matrix centered = p;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < pi.classes(); ++k) centered(i, k) -= means[k];
  const Matrix m = matmul(centered, p.transpose());
  // Homogeneous rows centre to rounding noise; judge it against the
  // uncentred product so it is not mistaken for structure.
  const Matrix raw = matmul(p, p.transpose());
  double raw_sq = 0.0;
  for (double v : raw.data()) raw_sq += v * v;
  const double noise = static_cast<double>(n) * std::numeric_limits<double>::epsilon();
  JacobiOptions opt;
  opt.zero_norm_sq = noise * noise * raw_sq;
  return nuclear_norm(m, opt) / static_cast<double>(n);
}

/// (16/(l+2)) (lambda + (1/n)||M||_*).
inline double theorem3_bound(const TopoObjective& obj, std::size_t l) {
  if (l < 1) throw InvalidArgument("rate bound needs l >= 1");
  return 16.0 / static_cast<double>(l + 2) * (obj.lambda() + proportions_nuclear_term(obj.proportions()));
}

/// (16/(l+2)) (lambda + 1); independent of n and Pi.
inline double loose_bound(double lambda, std::size_t l) {
  if (l < 1) throw InvalidArgument("rate bound needs l >= 1");
  return 16.0 / static_cast<double>(l + 2) * (lambda + 1.0);
}

struct FwRecord {
  std::size_t l = 0;
  double g_value = 0.0;
  double duality_gap = 0.0;  // <W^(l-1) - P^(l), grad g(W^(l-1))>
  double gamma = 0.0;
  Permutation permutation = Permutation::identity(0);
  std::size_t d_in_max = 0;
  std::size_t d_out_max = 0;
  std::size_t max_in_neighbors = 0;
  std::size_t max_out_neighbors = 0;
  double bound_value = 0.0;
};

struct FwTrace {
  std::vector<FwRecord> records;
  bool stopped_on_gap = false;
};

struct FwResult {
  MixingMatrix w;
  FwTrace trace;
};

/// Conditional gradient over the Birkhoff polytope from W = I. Runs L
/// iterations, or fewer when gap_tol > 0 and the duality gap drops to it.
/// `on_iterate`, if given, sees every iterate after its record is appended.
template <typename OnIterate>
FwResult frank_wolfe(const TopoObjective& obj, std::size_t iterations, double gap_tol, OnIterate&& on_iterate) {
  if (iterations < 1) throw InvalidBudget("Frank-Wolfe needs L >= 1");
  if (!(gap_tol >= 0.0)) throw InvalidBudget("gap tolerance must be >= 0");
  const std::size_t n = obj.n();
  const double nuclear = proportions_nuclear_term(obj.proportions());

  MixingMatrix w = MixingMatrix::validate(Matrix::identity(n));
  FwTrace trace;
  for (std::size_t l = 1; l <= iterations; ++l) {
    const Matrix grad = g_gradient(w, obj);
    AssignmentResult step = solve_assignment(grad);
    const MixingMatrix p = to_matrix(step.permutation);
    const double gap = frobenius_dot(w.matrix(), grad) - step.cost;
    if (gap_tol > 0.0 && gap <= gap_tol) {
      trace.stopped_on_gap = true;
      break;
    }
    const double gamma = line_search(w, p, obj);
    Matrix next = w.matrix();
    // Entrywise blend keeps exact zeros where both endpoints are zero.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next(i, j) = (1.0 - gamma) * next(i, j) + gamma * p(i, j);
    w = MixingMatrix::validate(std::move(next));

    const DegreeReport deg = degrees(w);
    FwRecord rec;
    rec.l = l;
    rec.g_value = g_value(w, obj);
    rec.duality_gap = gap;
    rec.gamma = gamma;
    rec.permutation = std::move(step.permutation);
    rec.d_in_max = deg.d_in_max;
    rec.d_out_max = deg.d_out_max;
    rec.max_in_neighbors = deg.max_in_neighbors;
    rec.max_out_neighbors = deg.max_out_neighbors;
    rec.bound_value = 16.0 / static_cast<double>(l + 2) * (obj.lambda() + nuclear);
    trace.records.push_back(std::move(rec));
    on_iterate(w, trace.records.back());
    if (gap_tol > 0.0 && gamma == 0.0) {
      trace.stopped_on_gap = true;
      break;
    }
  }
  return {std::move(w), std::move(trace)};
}

inline FwResult frank_wolfe(const TopoObjective& obj, std::size_t iterations, double gap_tol = 0.0) {
  return frank_wolfe(obj, iterations, gap_tol, [](const MixingMatrix&, const FwRecord&) {});
}

}  // namespace hetero_topo
