#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/proportions.hpp"
#include "hetero_topo/quadrature.hpp"
#include "hetero_topo/rng.hpp"

namespace hetero_topo {

/// One draw Z from a node distribution. Regression problems leave `label` at
/// -1; classification problems fill both.
struct DataPoint {
  std::vector<double> x;
  int label = -1;
};

/// Per-node stochastic oracle: F_i(theta, Z), its gradient, and the
/// expectations f_i and grad f_i over Z ~ D_i.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  virtual std::size_t dimension() const = 0;
  virtual void sample(StreamRng& rng, DataPoint& z) const = 0;
  virtual void stoch_grad(std::span<const double> theta, const DataPoint& z, std::span<double> out) const = 0;
  virtual void expected_grad(std::span<const double> theta, std::span<double> out) const = 0;
  virtual double expected_value(std::span<const double> theta) const = 0;
  /// False when the expectations come from a quadrature or sample surrogate.
  virtual bool expectations_exact() const = 0;
  /// Declared Lipschitz constant of expected_grad.
  virtual double smoothness() const = 0;
  /// E||grad F_i - grad f_i||^2 when it is known in closed form.
  virtual std::optional<double> known_noise_variance() const { return std::nullopt; }

  std::vector<double> expected_grad(std::span<const double> theta) const {
    std::vector<double> g(dimension());
    expected_grad(theta, g);
    return g;
  }
};

using ObjectivePtr = std::shared_ptr<const LocalObjective>;

/// F(theta, Z) = ||theta - Z||^2 with Z ~ N(center, sigma_tilde_sq I).
class MeanEstimation final : public LocalObjective {
 public:
  MeanEstimation(std::vector<double> center, double sigma_tilde_sq)
      : center_(std::move(center)), sigma_sq_(sigma_tilde_sq), sigma_(std::sqrt(sigma_tilde_sq)) {
    if (center_.empty()) throw InvalidArgument("mean estimation needs dimension >= 1");
    if (!(sigma_tilde_sq >= 0.0)) throw InvalidArgument("sigma_tilde_sq must be >= 0");
  }

  std::size_t dimension() const override { return center_.size(); }

  void sample(StreamRng& rng, DataPoint& z) const override {
    z.x.resize(center_.size());
    z.label = -1;
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < center_.size(); ++k) z.x[k] = center_[k] + sigma_ * normal(rng);
  }

  void stoch_grad(std::span<const double> theta, const DataPoint& z, std::span<double> out) const override {
    for (std::size_t k = 0; k < center_.size(); ++k) out[k] = 2.0 * (theta[k] - z.x[k]);
  }

  void expected_grad(std::span<const double> theta, std::span<double> out) const override {
    for (std::size_t k = 0; k < center_.size(); ++k) out[k] = 2.0 * (theta[k] - center_[k]);
  }
  using LocalObjective::expected_grad;

  double expected_value(std::span<const double> theta) const override {
    double s = 0.0;
    for (std::size_t k = 0; k < center_.size(); ++k) {
      const double d = theta[k] - center_[k];
      s += d * d + sigma_sq_;
    }
    return s;
  }

  bool expectations_exact() const override { return true; }
  double smoothness() const override { return 2.0; }
  std::optional<double> known_noise_variance() const override {
    return 4.0 * sigma_sq_ * static_cast<double>(center_.size());
  }

  const std::vector<double>& center() const noexcept { return center_; }
  double sigma_tilde_sq() const noexcept { return sigma_sq_; }

 private:
  std::vector<double> center_;
  double sigma_sq_;
  double sigma_;
};

/// Multinomial logistic regression on Gaussian class conditionals
/// X | Y = k ~ N(mu_k, I_q), shared by every node. The K means sit on a
/// regular simplex with pairwise distance class_sep. theta holds, per class
/// k, q weights followed by one bias: theta[k (q+1) + j], bias at j = q.
/// Class-conditional expectations use a tensor Gauss-Hermite rule.
class SoftmaxModel {
 public:
  SoftmaxModel(std::size_t classes, std::size_t features, double class_sep, std::size_t points_per_dim = 0)
      : k_(classes), q_(features), sep_(class_sep) {
    if (classes < 2) throw DimensionMismatch("softmax needs K >= 2");
    if (features + 1 < classes) throw DimensionMismatch("simplex class means need q >= K - 1");
    if (!(class_sep > 0.0)) throw InvalidArgument("class_sep must be positive");
    // Helmert coordinates of the standard basis: rows of an orthonormal basis
    // of the complement of 1, so pairwise distances stay sqrt(2).
    means_.assign(k_, std::vector<double>(q_, 0.0));
    const double scale = class_sep / std::sqrt(2.0);
    for (std::size_t r = 1; r < k_; ++r) {
      const double rr = static_cast<double>(r);
      const double norm = std::sqrt(rr * (rr + 1.0));
      for (std::size_t k = 0; k < k_; ++k) {
        double h = 0.0;
        if (k < r) h = 1.0 / norm;
        else if (k == r) h = -rr / norm;
        means_[k][r - 1] = scale * h;
      }
    }
    rule_ = tensor_gauss_hermite(q_, points_per_dim == 0 ? default_points_per_dim(q_) : points_per_dim);
  }

  std::size_t classes() const noexcept { return k_; }
  std::size_t features() const noexcept { return q_; }
  double class_sep() const noexcept { return sep_; }
  std::size_t dimension() const noexcept { return k_ * (q_ + 1); }
  const std::vector<double>& mean(std::size_t k) const { return means_.at(k); }
  std::size_t quadrature_points() const noexcept { return rule_.count; }

  /// Upper bound on the Hessian norm of every class-conditional loss:
  /// (1/2) max_k E||(X, 1)||^2.
  double smoothness() const {
    double worst = 0.0;
    for (const auto& m : means_) worst = std::max(worst, norm_sq(m));
    return 0.5 * (1.0 + static_cast<double>(q_) + worst);
  }

  /// Softmax probabilities into `p`; returns log-sum-exp of the logits.
  double probabilities(std::span<const double> theta, std::span<const double> x, std::span<double> p) const {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_; ++k) {
      const std::size_t off = k * (q_ + 1);
      double z = theta[off + q_];
      for (std::size_t j = 0; j < q_; ++j) z += theta[off + j] * x[j];
      p[k] = z;
      zmax = std::max(zmax, z);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < k_; ++k) {
      p[k] = std::exp(p[k] - zmax);
      total += p[k];
    }
    for (std::size_t k = 0; k < k_; ++k) p[k] /= total;
    return zmax + std::log(total);
  }

  double loss(std::span<const double> theta, std::span<const double> x, std::size_t y) const {
    std::vector<double> p(k_);
    const double lse = probabilities(theta, x, p);
    const std::size_t off = y * (q_ + 1);
    double zy = theta[off + q_];
    for (std::size_t j = 0; j < q_; ++j) zy += theta[off + j] * x[j];
    return lse - zy;
  }

  /// out += scale * grad_theta F(theta; x, y).
  void add_grad(std::span<const double> theta, std::span<const double> x, std::size_t y, double scale,
                std::span<double> out, std::span<double> scratch) const {
    probabilities(theta, x, scratch);
    for (std::size_t k = 0; k < k_; ++k) {
      const double r = scale * (scratch[k] - (k == y ? 1.0 : 0.0));
      const std::size_t off = k * (q_ + 1);
      for (std::size_t j = 0; j < q_; ++j) out[off + j] += r * x[j];
      out[off + q_] += r;
    }
  }

  /// E[F(theta; X, k) | Y = k].
  double class_value(std::span<const double> theta, std::size_t k) const {
    std::vector<double> x(q_);
    double s = 0.0;
    for (std::size_t c = 0; c < rule_.count; ++c) {
      shifted_point(k, c, x);
      s += rule_.weights[c] * loss(theta, x, k);
    }
    return s;
  }

  /// out = E[grad F(theta; X, k) | Y = k].
  void class_grad(std::span<const double> theta, std::size_t k, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> x(q_), scratch(k_);
    for (std::size_t c = 0; c < rule_.count; ++c) {
      shifted_point(k, c, x);
      add_grad(theta, x, k, rule_.weights[c], out, scratch);
    }
  }

  /// Hessian of sum_k mix[k] E[F | Y = k], dimension() x dimension().
  Matrix mixture_hessian(std::span<const double> theta, std::span<const double> mix) const {
    const std::size_t dim = dimension();
    Matrix h(dim, dim);
    std::vector<double> x(q_), xt(q_ + 1), p(k_);
    for (std::size_t k = 0; k < k_; ++k) {
      if (mix[k] == 0.0) continue;
      for (std::size_t c = 0; c < rule_.count; ++c) {
        shifted_point(k, c, x);
        probabilities(theta, x, p);
        std::copy(x.begin(), x.end(), xt.begin());
        xt[q_] = 1.0;
        const double w = mix[k] * rule_.weights[c];
        for (std::size_t a = 0; a < k_; ++a)
          for (std::size_t b = 0; b < k_; ++b) {
            const double s = w * ((a == b ? p[a] : 0.0) - p[a] * p[b]);
            if (s == 0.0) continue;
            for (std::size_t u = 0; u <= q_; ++u)
              for (std::size_t v = 0; v <= q_; ++v) h(a * (q_ + 1) + u, b * (q_ + 1) + v) += s * xt[u] * xt[v];
          }
      }
    }
    return h;
  }

  double mixture_value(std::span<const double> theta, std::span<const double> mix) const {
    double s = 0.0;
    for (std::size_t k = 0; k < k_; ++k)
      if (mix[k] != 0.0) s += mix[k] * class_value(theta, k);
    return s;
  }

  void mixture_grad(std::span<const double> theta, std::span<const double> mix, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> g(dimension());
    for (std::size_t k = 0; k < k_; ++k) {
      if (mix[k] == 0.0) continue;
      class_grad(theta, k, g);
      for (std::size_t a = 0; a < g.size(); ++a) out[a] += mix[k] * g[a];
    }
  }

 private:
  void shifted_point(std::size_t k, std::size_t c, std::span<double> x) const {
    for (std::size_t j = 0; j < q_; ++j) x[j] = means_[k][j] + rule_.points[c * q_ + j];
  }

  std::size_t k_, q_;
  double sep_;
  std::vector<std::vector<double>> means_;
  TensorRule rule_;
};

/// One node of the label-skew problem: Y ~ Categorical(pi_i), then X | Y from
/// the shared model.
class SoftmaxNode final : public LocalObjective {
 public:
  SoftmaxNode(std::shared_ptr<const SoftmaxModel> model, std::vector<double> label_marginal)
      : model_(std::move(model)), pi_(std::move(label_marginal)) {
    if (pi_.size() != model_->classes()) throw DimensionMismatch("label marginal length differs from K");
  }

  std::size_t dimension() const override { return model_->dimension(); }

  void sample(StreamRng& rng, DataPoint& z) const override {
    const double u = rng.uniform();
    std::size_t y = 0;
    double cum = 0.0;
    std::optional<std::size_t> last_positive;
    bool found = false;
    for (std::size_t k = 0; k < pi_.size(); ++k) {
      if (pi_[k] <= 0.0) continue;
      last_positive = k;
      cum += pi_[k];
      if (u < cum) {
        y = k;
        found = true;
        break;
      }
    }
    if (!found) {
      if (!last_positive) throw SamplingFailure("label marginal has no positive entry");
      y = *last_positive;
    }
    const std::size_t q = model_->features();
    z.x.resize(q);
    z.label = static_cast<int>(y);
    std::normal_distribution<double> normal;
    const auto& mu = model_->mean(y);
    for (std::size_t j = 0; j < q; ++j) z.x[j] = mu[j] + normal(rng);
  }

  void stoch_grad(std::span<const double> theta, const DataPoint& z, std::span<double> out) const override {
    if (z.label < 0) throw SamplingFailure("classification draw without a label");
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> scratch(model_->classes());
    model_->add_grad(theta, z.x, static_cast<std::size_t>(z.label), 1.0, out, scratch);
  }

  void expected_grad(std::span<const double> theta, std::span<double> out) const override {
    model_->mixture_grad(theta, pi_, out);
  }
  using LocalObjective::expected_grad;

  double expected_value(std::span<const double> theta) const override { return model_->mixture_value(theta, pi_); }
  bool expectations_exact() const override { return false; }
  double smoothness() const override { return model_->smoothness(); }

  const std::vector<double>& label_marginal() const noexcept { return pi_; }

 private:
  std::shared_ptr<const SoftmaxModel> model_;
  std::vector<double> pi_;
};

enum class ProblemKind { mean_estimation, softmax_label_skew };

inline std::string_view to_string(ProblemKind k) {
  return k == ProblemKind::mean_estimation ? "mean_estimation" : "softmax_label_skew";
}

struct MeanEstimationParams {
  std::size_t n = 0;
  double m = 1.0;
  double sigma_tilde_sq = 1.0;
  std::size_t dim = 1;
  double theta0 = 1.0;  // every coordinate of the shared starting point
};

struct LabelSkewParams {
  std::size_t n = 0;
  std::size_t classes = 0;
  std::size_t features = 0;
  double class_sep = 4.0;
  std::optional<double> alpha;  // set when proportions came from a Dirichlet draw
  std::size_t points_per_dim = 0;  // 0 = default_points_per_dim(q)
  double theta0 = 0.0;
};

/// How f* was obtained.
struct OptimumRecipe {
  std::string method;  // "closed_form" or "newton_full_batch"
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = true;
};

/// A fully built problem: per-node oracles plus the global optimum.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::mean_estimation;
  std::size_t n = 0;
  std::vector<ObjectivePtr> objectives;
  std::vector<double> theta0;
  std::vector<double> theta_star;
  double f_star = 0.0;
  double L = 0.0;
  std::uint64_t seed = 0;
  std::variant<MeanEstimationParams, LabelSkewParams> params;
  std::optional<ClassProportions> proportions;
  std::shared_ptr<const SoftmaxModel> model;
  OptimumRecipe optimum;

  std::size_t dimension() const { return objectives.front()->dimension(); }

  /// f(theta) = (1/n) sum_i f_i(theta).
  double global_value(std::span<const double> theta) const {
    if (model && proportions) {
      const auto mix = proportions->class_means();
      return model->mixture_value(theta, mix);
    }
    double s = 0.0;
    for (const auto& o : objectives) s += o->expected_value(theta);
    return s / static_cast<double>(n);
  }

  void global_grad(std::span<const double> theta, std::span<double> out) const {
    if (model && proportions) {
      model->mixture_grad(theta, proportions->class_means(), out);
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> g(dimension());
    for (const auto& o : objectives) {
      o->expected_grad(theta, g);
      for (std::size_t a = 0; a < g.size(); ++a) out[a] += g[a];
    }
    for (double& v : out) v /= static_cast<double>(n);
  }

  /// f(theta) - f*.
  double gap(std::span<const double> theta) const { return global_value(theta) - f_star; }
};

/// Two Gaussian clusters: node i (0-based) even draws around +m, odd around
/// -m, so 1-based odd nodes sit at +m.
inline ProblemSpec make_mean_estimation(const MeanEstimationParams& params, std::uint64_t seed = 0) {
  if (params.n == 0 || params.n % 2 != 0) throw OddN(params.n);
  if (!(params.sigma_tilde_sq >= 0.0)) throw InvalidArgument("sigma_tilde_sq must be >= 0");
  if (params.dim == 0) throw InvalidArgument("dimension must be >= 1");
  ProblemSpec spec;
  spec.kind = ProblemKind::mean_estimation;
  spec.n = params.n;
  spec.seed = seed;
  spec.params = params;
  for (std::size_t i = 0; i < params.n; ++i) {
    const double c = (i % 2 == 0) ? params.m : -params.m;
    spec.objectives.push_back(
        std::make_shared<MeanEstimation>(std::vector<double>(params.dim, c), params.sigma_tilde_sq));
  }
  spec.theta0.assign(params.dim, params.theta0);
  spec.theta_star.assign(params.dim, 0.0);
  spec.f_star = spec.global_value(spec.theta_star);
  spec.L = 2.0;
  spec.optimum = {"closed_form", 0, 0.0, true};
  return spec;
}

inline ProblemSpec make_mean_estimation(std::size_t n, double m, double sigma_tilde_sq) {
  MeanEstimationParams p;
  p.n = n;
  p.m = m;
  p.sigma_tilde_sq = sigma_tilde_sq;
  return make_mean_estimation(p);
}

/// Mean estimation with arbitrary per-node centers and variances; the
/// optimum is the average center.
inline ProblemSpec make_mean_estimation_custom(std::vector<std::vector<double>> centers,
                                               std::vector<double> sigma_tilde_sq) {
  if (centers.empty() || centers.size() != sigma_tilde_sq.size())
    throw DimensionMismatch("one center and one variance per node");
  ProblemSpec spec;
  spec.kind = ProblemKind::mean_estimation;
  spec.n = centers.size();
  const std::size_t d = centers.front().size();
  spec.theta_star.assign(d, 0.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (centers[i].size() != d) throw DimensionMismatch("centers differ in dimension");
    for (std::size_t a = 0; a < d; ++a) spec.theta_star[a] += centers[i][a];
    spec.objectives.push_back(std::make_shared<MeanEstimation>(centers[i], sigma_tilde_sq[i]));
  }
  for (double& v : spec.theta_star) v /= static_cast<double>(spec.n);
  MeanEstimationParams p;
  p.n = spec.n;
  p.dim = d;
  p.theta0 = 0.0;
  spec.params = p;
  spec.theta0.assign(d, 0.0);
  spec.f_star = spec.global_value(spec.theta_star);
  spec.L = 2.0;
  spec.optimum = {"closed_form", 0, 0.0, true};
  return spec;
}

namespace detail {

// Solves (A + ridge I) x = b for symmetric positive semidefinite A by
// Cholesky. The ridge absorbs the softmax shift invariance; the gradient is
// orthogonal to that null direction, so the step is unaffected.
inline std::vector<double> solve_spd(Matrix a, std::vector<double> b, double ridge) {
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) a(i, i) += ridge;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) throw NumericalError("Newton system is not positive definite");
    d = std::sqrt(d);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return b;
}

}  // namespace detail

struct NewtonOptions {
  double grad_tol = 1e-10;
  std::size_t max_iterations = 200;
};

/// Minimizes sum_k mix[k] E[F | Y = k] by damped Newton from zero.
inline std::pair<std::vector<double>, OptimumRecipe> softmax_optimum(const SoftmaxModel& model,
                                                                     std::span<const double> mix,
                                                                     const NewtonOptions& opt = {}) {
  const std::size_t dim = model.dimension();
  std::vector<double> theta(dim, 0.0), grad(dim), trial(dim);
  double value = model.mixture_value(theta, mix);
  OptimumRecipe recipe{"newton_full_batch", 0, 0.0, false};
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    model.mixture_grad(theta, mix, grad);
    recipe.iterations = it;
    recipe.grad_norm = std::sqrt(norm_sq(grad));
    if (recipe.grad_norm <= opt.grad_tol) {
      recipe.converged = true;
      break;
    }
    const Matrix h = model.mixture_hessian(theta, mix);
    double trace = 0.0;
    for (std::size_t a = 0; a < dim; ++a) trace += h(a, a);
    std::vector<double> rhs(dim);
    for (std::size_t a = 0; a < dim; ++a) rhs[a] = -grad[a];
    const std::vector<double> step = detail::solve_spd(h, rhs, 1e-12 * (1.0 + trace / static_cast<double>(dim)));
    const double slope = dot(grad, step);
    double t = 1.0;
    double next = value;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t a = 0; a < dim; ++a) trial[a] = theta[a] + t * step[a];
      next = model.mixture_value(trial, mix);
      if (next <= value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No further decrease representable; the gradient is at rounding level.
      recipe.converged = recipe.grad_norm <= 1e-8;
      break;
    }
    theta = trial;
    value = next;
    recipe.iterations = it + 1;
  }
  if (!recipe.converged) {
    model.mixture_grad(theta, mix, grad);
    recipe.grad_norm = std::sqrt(norm_sq(grad));
    recipe.converged = recipe.grad_norm <= opt.grad_tol;
  }
  return {std::move(theta), recipe};
}

/// Label-skew classification. Every node shares P(X | Y) and the loss; only
/// the label marginals pi_i differ.
inline ProblemSpec make_label_skew(const LabelSkewParams& params, const ClassProportions& pi, std::uint64_t seed = 0) {
  if (pi.n() != params.n || pi.classes() != params.classes)
    throw DimensionMismatch("proportions shape differs from (n, K)");
  auto model = std::make_shared<const SoftmaxModel>(params.classes, params.features, params.class_sep,
                                                    params.points_per_dim);
  ProblemSpec spec;
  spec.kind = ProblemKind::softmax_label_skew;
  spec.n = params.n;
  spec.seed = seed;
  spec.params = params;
  spec.proportions = pi;
  spec.model = model;
  for (std::size_t i = 0; i < params.n; ++i) spec.objectives.push_back(std::make_shared<SoftmaxNode>(model, pi.node(i)));
  spec.theta0.assign(model->dimension(), params.theta0);
  const auto mix = pi.class_means();
  auto [theta_star, recipe] = softmax_optimum(*model, mix);
  spec.theta_star = std::move(theta_star);
  spec.optimum = recipe;
  spec.f_star = model->mixture_value(spec.theta_star, mix);
  spec.L = model->smoothness();
  return spec;
}

/// B of the class-level heterogeneity bound: max over probes and classes of
/// ||E[grad F | Y = k] - (1/K) sum_k' E[grad F | Y = k']||^2.
inline double estimate_B(const SoftmaxModel& model, const std::vector<std::vector<double>>& probes) {
  const std::size_t dim = model.dimension();
  const std::size_t kk = model.classes();
  double best = 0.0;
  std::vector<std::vector<double>> g(kk, std::vector<double>(dim));
  std::vector<double> avg(dim);
  for (const auto& theta : probes) {
    std::fill(avg.begin(), avg.end(), 0.0);
    for (std::size_t k = 0; k < kk; ++k) {
      model.class_grad(theta, k, g[k]);
      for (std::size_t a = 0; a < dim; ++a) avg[a] += g[k][a];
    }
    for (double& v : avg) v /= static_cast<double>(kk);
    for (std::size_t k = 0; k < kk; ++k) {
      double s = 0.0;
      for (std::size_t a = 0; a < dim; ++a) {
        const double d = g[k][a] - avg[a];
        s += d * d;
      }
      best = std::max(best, s);
    }
  }
  return best;
}

}  // namespace hetero_topo
