#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hetero_topo/problems.hpp"
#include "hetero_topo/proportions.hpp"
#include "hetero_topo/quadrature.hpp"
#include "oracles.hpp"

namespace ht = hetero_topo;
using ht::ClassProportions;
using ht::Matrix;

namespace {

std::vector<double> random_theta(std::size_t d, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> t(d);
  for (double& v : t) v = u(rng);
  return t;
}

// Componentwise |MC mean - expected| <= 5 stderr over `draws` samples.
void expect_unbiased(const ht::LocalObjective& obj, const std::vector<double>& theta, std::size_t draws,
                     std::uint64_t stream) {
  const std::size_t d = obj.dimension();
  std::vector<double> sum(d, 0.0), sq(d, 0.0), g(d);
  ht::DataPoint z;
  for (std::size_t s = 0; s < draws; ++s) {
    ht::StreamRng rng(2024, ht::StreamDomain::unbiasedness, stream, s);
    obj.sample(rng, z);
    obj.stoch_grad(theta, z, g);
    for (std::size_t a = 0; a < d; ++a) {
      sum[a] += g[a];
      sq[a] += g[a] * g[a];
    }
  }
  const auto expected = obj.expected_grad(theta);
  const double m = static_cast<double>(draws);
  for (std::size_t a = 0; a < d; ++a) {
    const double mean = sum[a] / m;
    const double var = std::max(0.0, (sq[a] - m * mean * mean) / (m - 1.0));
    const double se = std::sqrt(var / m);
    EXPECT_LE(std::abs(mean - expected[a]), 5.0 * se + 1e-12) << "component " << a;
  }
}

void expect_smooth_and_convex(const ht::LocalObjective& obj, double L, std::mt19937_64& rng, double scale) {
  const std::size_t d = obj.dimension();
  for (int pair = 0; pair < 100; ++pair) {
    const auto a = random_theta(d, scale, rng);
    const auto b = random_theta(d, scale, rng);
    const auto ga = obj.expected_grad(a);
    const auto gb = obj.expected_grad(b);
    double dg = 0.0, dt = 0.0, inner = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      dg += (ga[k] - gb[k]) * (ga[k] - gb[k]);
      dt += (a[k] - b[k]) * (a[k] - b[k]);
      inner += (ga[k] - gb[k]) * (a[k] - b[k]);
    }
    EXPECT_LE(std::sqrt(dg), L * std::sqrt(dt) + 1e-8);
    EXPECT_GE(inner, -1e-10);
  }
}

}  // namespace

TEST(Quadrature, MomentsOfStandardNormal) {
  for (std::size_t pts : {1u, 2u, 5u, 12u, 32u}) {
    const auto rule = ht::gauss_hermite_normal(pts);
    double m0 = 0, m1 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < pts; ++i) {
      const double x = rule.nodes[i], w = rule.weights[i];
      m0 += w;
      m1 += w * x;
      m2 += w * x * x;
      m4 += w * x * x * x * x;
      if (i > 0) {
        EXPECT_LT(rule.nodes[i - 1], x);
      }
    }
    EXPECT_NEAR(m0, 1.0, 1e-13);
    EXPECT_NEAR(m1, 0.0, 1e-13);
    if (pts >= 2) {
      EXPECT_NEAR(m2, 1.0, 1e-12);
    }
    if (pts >= 3) {
      EXPECT_NEAR(m4, 3.0, 1e-11);
    }
  }
}

TEST(Quadrature, AgreesWithGolubWelsch) {
  const auto ours = ht::gauss_hermite_normal(20);
  const auto ref = oracle::golub_welsch_normal(20);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(ours.nodes[i], ref.nodes[i], 1e-11);
    EXPECT_NEAR(ours.weights[i], ref.weights[i], 1e-12);
  }
}

TEST(Quadrature, TensorRuleAndDefaults) {
  const auto t = ht::tensor_gauss_hermite(3, 4);
  EXPECT_EQ(t.count, 64u);
  double s = 0.0, second = 0.0;
  for (std::size_t c = 0; c < t.count; ++c) {
    s += t.weights[c];
    second += t.weights[c] * t.points[c * 3 + 2] * t.points[c * 3 + 2];
  }
  EXPECT_NEAR(s, 1.0, 1e-13);
  EXPECT_NEAR(second, 1.0, 1e-12);
  EXPECT_EQ(ht::default_points_per_dim(1), 32u);
  EXPECT_EQ(ht::default_points_per_dim(2), 32u);
  EXPECT_EQ(ht::default_points_per_dim(3), 16u);
  EXPECT_GE(ht::default_points_per_dim(20), 3u);
}

TEST(MeanEstimation, ZeroVarianceGradientsAreDeterministic) {
  const auto spec = ht::make_mean_estimation(4, 1.0, 0.0);
  std::vector<double> g(1);
  ht::DataPoint z;
  for (std::size_t i = 0; i < 4; ++i) {
    ht::StreamRng rng(1, ht::StreamDomain::generic, i);
    spec.objectives[i]->sample(rng, z);
    const std::vector<double> theta{0.3};
    spec.objectives[i]->stoch_grad(theta, z, g);
    const double center = i % 2 == 0 ? 1.0 : -1.0;
    EXPECT_EQ(g[0], 2.0 * (0.3 - center));
    EXPECT_EQ(spec.objectives[i]->expected_grad(theta)[0], 2.0 * (0.3 - center));
    EXPECT_EQ(*spec.objectives[i]->known_noise_variance(), 0.0);
  }
}

TEST(MeanEstimation, ClosedForms) {
  const auto spec = ht::make_mean_estimation(6, 2.5, 1.7);
  EXPECT_EQ(spec.theta_star, std::vector<double>{0.0});
  EXPECT_EQ(spec.L, 2.0);
  EXPECT_DOUBLE_EQ(spec.f_star, spec.global_value(std::vector<double>{0.0}));
  for (const auto& o : spec.objectives) EXPECT_DOUBLE_EQ(*o->known_noise_variance(), 4.0 * 1.7);
  for (double th : {-3.0, 0.0, 1.25}) {
    std::vector<double> g(1);
    spec.global_grad(std::vector<double>{th}, g);
    EXPECT_DOUBLE_EQ(g[0], 2.0 * th);
  }
}

TEST(MeanEstimation, OddNRejected) { EXPECT_THROW(ht::make_mean_estimation(5, 1.0, 1.0), ht::OddN); }

TEST(MeanEstimation, UnbiasedSmoothConvex) {
  ht::MeanEstimationParams p;
  p.n = 4;
  p.m = 3.0;
  p.sigma_tilde_sq = 2.0;
  p.dim = 3;
  const auto spec = ht::make_mean_estimation(p);
  std::mt19937_64 rng(5);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (int t = 0; t < 3; ++t) expect_unbiased(*spec.objectives[i], random_theta(3, 4.0, rng), 100000, i * 10 + t);
  for (const auto& o : spec.objectives) expect_smooth_and_convex(*o, spec.L, rng, 5.0);
}

TEST(MeanEstimation, EmpiricalNoiseVarianceMatches) {
  const ht::MeanEstimation obj({1.0}, 0.5);
  double sum = 0.0, sq = 0.0;
  const std::size_t draws = 200000;
  std::vector<double> g(1);
  ht::DataPoint z;
  const std::vector<double> theta{0.0};
  for (std::size_t s = 0; s < draws; ++s) {
    ht::StreamRng rng(3, ht::StreamDomain::generic, s);
    obj.sample(rng, z);
    obj.stoch_grad(theta, z, g);
    sum += g[0];
    sq += g[0] * g[0];
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  EXPECT_NEAR(var, 4.0 * 0.5, 0.05);
}

TEST(Softmax, SimplexMeansHavePairwiseSeparation) {
  const ht::SoftmaxModel model(5, 4, 3.0, 3);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) {
      double d = 0.0;
      for (std::size_t j = 0; j < 4; ++j) d += std::pow(model.mean(a)[j] - model.mean(b)[j], 2);
      EXPECT_NEAR(std::sqrt(d), 3.0, 1e-12);
    }
  EXPECT_THROW(ht::SoftmaxModel(4, 2, 1.0), ht::DimensionMismatch);
  EXPECT_THROW(ht::SoftmaxModel(1, 2, 1.0), ht::DimensionMismatch);
  EXPECT_THROW(ht::SoftmaxModel(2, 2, 0.0), ht::InvalidArgument);
}

TEST(Softmax, UnbiasedSmoothConvex) {
  ht::LabelSkewParams p;
  p.n = 3;
  p.classes = 3;
  p.features = 2;
  const auto pi = ht::dirichlet_proportions(3, 3, 1.0, 8);
  const auto spec = ht::make_label_skew(p, pi, 8);
  std::mt19937_64 rng(77);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (int t = 0; t < 3; ++t)
      expect_unbiased(*spec.objectives[i], random_theta(spec.dimension(), 1.0, rng), 100000, 100 + i * 10 + t);
  for (const auto& o : spec.objectives) expect_smooth_and_convex(*o, spec.L, rng, 2.0);
}

TEST(Softmax, GradientMatchesFiniteDifferenceOfValue) {
  const ht::SoftmaxModel model(3, 2, 2.0);
  const std::vector<double> mix{0.2, 0.5, 0.3};
  std::mt19937_64 rng(4);
  const auto theta = random_theta(model.dimension(), 1.0, rng);
  std::vector<double> g(model.dimension());
  model.mixture_grad(theta, mix, g);
  const double h = 1e-6;
  for (std::size_t a = 0; a < theta.size(); ++a) {
    auto plus = theta, minus = theta;
    plus[a] += h;
    minus[a] -= h;
    const double fd = (model.mixture_value(plus, mix) - model.mixture_value(minus, mix)) / (2.0 * h);
    EXPECT_NEAR(fd, g[a], 1e-7);
  }
}

TEST(Softmax, OptimumMatchesGradientDescentOracle) {
  ht::LabelSkewParams p;
  p.n = 2;
  p.classes = 2;
  p.features = 1;
  p.class_sep = 4.0;
  p.points_per_dim = 64;
  const auto spec = ht::make_label_skew(p, ClassProportions::validate(Matrix::identity(2)), 0);
  EXPECT_TRUE(spec.optimum.converged);
  EXPECT_EQ(spec.optimum.method, "newton_full_batch");
  const auto ref = oracle::softmax_gd_two_class(4.0, 1000000);
  EXPECT_LT(ref.grad_norm, 1e-9);
  EXPECT_NEAR(spec.f_star, ref.f_star, 1e-10);
  EXPECT_DOUBLE_EQ(spec.L, 3.0);
  std::vector<double> g(spec.dimension());
  spec.global_grad(spec.theta_star, g);
  EXPECT_LT(std::sqrt(ht::norm_sq(g)), 1e-9);
}

TEST(Softmax, HomogeneousNodesShareGradients) {
  ht::LabelSkewParams p;
  p.n = 4;
  p.classes = 3;
  p.features = 2;
  const auto spec = ht::make_label_skew(p, ht::homogeneous_proportions(4, {0.2, 0.3, 0.5}));
  std::mt19937_64 rng(1);
  const auto theta = random_theta(spec.dimension(), 1.0, rng);
  const auto g0 = spec.objectives[0]->expected_grad(theta);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(spec.objectives[i]->expected_grad(theta), g0);
}

TEST(Softmax, OneClassNodesDrawOnlyTheirClass) {
  ht::LabelSkewParams p;
  p.n = 4;
  p.classes = 2;
  p.features = 1;
  const auto spec = ht::make_label_skew(p, ht::one_class_per_node(4, 2));
  ht::DataPoint z;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::uint64_t s = 0; s < 200; ++s) {
      ht::StreamRng rng(0, ht::StreamDomain::generic, i, s);
      spec.objectives[i]->sample(rng, z);
      EXPECT_EQ(z.label, static_cast<int>(i % 2));
    }
}

TEST(Softmax, EstimateBPositiveForSeparatedClasses) {
  const ht::SoftmaxModel model(3, 2, 4.0);
  const std::vector<std::vector<double>> probes{std::vector<double>(model.dimension(), 0.0)};
  EXPECT_GT(ht::estimate_B(model, probes), 0.0);
}

TEST(Dirichlet, ConcentratedRowsNearUniform) {
  const auto pi = ht::dirichlet_proportions(10, 4, 1e6, 3);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(pi(i, k), 0.25, 1e-2);
}

TEST(Dirichlet, RowSumsAndDeterminism) {
  const auto a = ht::dirichlet_proportions(20, 5, 0.1, 99);
  const auto b = ht::dirichlet_proportions(20, 5, 0.1, 99);
  const auto c = ht::dirichlet_proportions(20, 5, 0.1, 100);
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      s += a(i, k);
      EXPECT_GE(a(i, k), 0.0);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_EQ(a.matrix().data()[0], b.matrix().data()[0]);
  for (std::size_t k = 0; k < 100; ++k) EXPECT_EQ(a.matrix().data()[k], b.matrix().data()[k]);
  EXPECT_NE(a.matrix().data()[0], c.matrix().data()[0]);
  EXPECT_THROW(ht::dirichlet_proportions(3, 2, 0.0, 1), ht::InvalidArgument);
}

TEST(Proportions, Validation) {
  EXPECT_THROW(ClassProportions::validate(Matrix::from_rows({{0.5, 0.4}})), ht::RowSumViolation);
  EXPECT_THROW(ClassProportions::validate(Matrix::from_rows({{1.5, -0.5}})), ht::NegativeEntry);
  const auto pi = ht::one_class_per_node(6, 3);
  EXPECT_EQ(pi.class_means(), (std::vector<double>{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}));
  EXPECT_THROW(ht::one_class_per_node(5, 3), ht::InvalidArgument);
}
