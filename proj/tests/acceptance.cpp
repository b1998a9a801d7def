// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "hetero_topo/hetero_topo.hpp"
#include "oracles.hpp"

namespace ht = hetero_topo;
using ht::ClassProportions;
using ht::Matrix;
using ht::MixingMatrix;
using ht::TopologyKind;

namespace {

struct Check {
  bool ok = true;
  std::string why;

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int failures = 0;

template <typename Body>
void criterion(int id, const char* title, double budget_s, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0.0) c.require(secs < budget_s, "runtime " + fmt(secs) + " s over budget " + fmt(budget_s) + " s");
  if (!c.ok) ++failures;
  std::printf("criterion %2d %s: %s (%.1f s)%s%s\n", id, c.ok ? "PASS" : "FAIL", title, secs, c.ok ? "" : " -- ",
              c.ok ? "" : c.why.c_str());
  std::fflush(stdout);
}

std::vector<double> random_theta(std::size_t d, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> t(d);
  for (double& v : t) v = u(rng);
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Missing hits count as +inf so the median stays well defined.
double hit_or_inf(const std::optional<std::size_t>& h) {
  return h ? static_cast<double>(*h) : std::numeric_limits<double>::infinity();
}

void objective_properties(Check& c, const ht::ProblemSpec& spec, std::mt19937_64& rng, double scale,
                          std::uint64_t stream_base) {
  const std::size_t d = spec.dimension();
  const std::size_t draws = 50000;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto& obj = *spec.objectives[i];
    const auto theta = random_theta(d, scale, rng);
    std::vector<double> sum(d, 0.0), sq(d, 0.0), g(d);
    ht::DataPoint z;
    for (std::size_t s = 0; s < draws; ++s) {
      ht::StreamRng r(99, ht::StreamDomain::unbiasedness, stream_base + i, s);
      obj.sample(r, z);
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
      const double se = std::sqrt(std::max(0.0, (sq[a] - m * mean * mean) / (m - 1.0)) / m);
      c.require(std::abs(mean - expected[a]) <= 5.0 * se + 1e-12,
                "unbiasedness: node " + std::to_string(i) + " component " + std::to_string(a));
    }
    for (int pair = 0; pair < 50; ++pair) {
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
      c.require(std::sqrt(dg) <= spec.L * std::sqrt(dt) + 1e-8, "smoothness: node " + std::to_string(i));
      c.require(inner >= -1e-10, "monotone gradient: node " + std::to_string(i));
      // First-order convexity from the value oracle as well.
      double lin = 0.0;
      for (std::size_t k = 0; k < d; ++k) lin += ga[k] * (b[k] - a[k]);
      c.require(obj.expected_value(b) >= obj.expected_value(a) + lin - 1e-10, "convexity: node " + std::to_string(i));
    }
  }
}

}  // namespace

int main() {
  criterion(1, "Example 1 exact quantities on the alternating ring", 30.0, [](Check& c) {
    const std::size_t n = 16;
    const double s2 = 1.0;
    const auto w = ht::make_topology(TopologyKind::alternating_ring, n);
    const std::vector<ht::Probe> probes{{0.0}, {1.0}, {-3.5}};
    for (double m : {1.0, 10.0, 100.0}) {
      const auto spec = ht::make_mean_estimation(n, m, s2);
      const double zeta = ht::estimate_zeta_bar_sq(spec.objectives, probes);
      c.require(std::abs(zeta - 4.0 * m * m) <= 1e-9, "zeta_bar_sq " + fmt(zeta) + " at m = " + fmt(m));
      ht::SamplingOptions opt;
      opt.samples = 100000;
      opt.seed = 11;
      const auto h = ht::estimate_H(w, spec.objectives, {{0.0}}, opt);
      const double cap = 4.0 * s2 * (1.0 + 5.0 / std::sqrt(static_cast<double>(opt.samples)));
      c.require(h.value <= cap, "H " + fmt(h.value) + " above " + fmt(cap) + " at m = " + fmt(m));
      const double bias = ht::neighborhood_bias_term(w, spec.objectives, probes);
      c.require(std::abs(bias) <= 1e-12, "bias term " + fmt(bias) + " at m = " + fmt(m));
    }
  });

  criterion(2, "Frank-Wolfe iterates respect the convergence bound and the sparsity budget", 60.0, [](Check& c) {
    std::size_t literal_self_loop_excess = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const double alpha = trial % 2 == 0 ? 0.1 : 1.0;
      const auto pi = ht::dirichlet_proportions(20, 5, alpha, 1000 + static_cast<std::uint64_t>(trial));
      for (double lambda : {0.01, 0.1, 1.0}) {
        const ht::TopoObjective obj(pi, lambda);
        ht::frank_wolfe(obj, 30, 0.0, [&](const MixingMatrix&, const ht::FwRecord& r) {
          const std::string where = "trial " + std::to_string(trial) + " lambda " + fmt(lambda) + " l " +
                                    std::to_string(r.l);
          const double b3 = ht::theorem3_bound(obj, r.l);
          c.require(r.g_value <= b3, where + ": g " + fmt(r.g_value) + " > bound " + fmt(b3));
          c.require(r.g_value <= ht::loose_bound(lambda, r.l), where + ": loose bound");
          c.require(r.max_in_neighbors <= r.l && r.max_out_neighbors <= r.l, where + ": more than l neighbours");
          c.require(r.d_in_max <= r.l + 1 && r.d_out_max <= r.l + 1, where + ": degree with self-loop above l + 1");
          if (r.d_in_max > r.l || r.d_out_max > r.l) ++literal_self_loop_excess;
        });
      }
    }
    std::printf("  info: %zu of 4500 iterates exceed l only through the self-loop counted in d_in/d_out\n",
                literal_self_loop_excess);
  });

  criterion(3, "Homogeneous and one-class-per-node special-case bounds", 0.0, [](Check& c) {
    const std::size_t n = 20, k = 5;
    const auto homo = ht::homogeneous_proportions(n, {0.1, 0.2, 0.3, 0.25, 0.15});
    const auto one = ht::one_class_per_node(n, k);
    for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
      const ht::TopoObjective oh(homo, lambda), oo(one, lambda);
      ht::frank_wolfe(oh, 30, 0.0, [&](const MixingMatrix&, const ht::FwRecord& r) {
        const double b = 16.0 * lambda / static_cast<double>(r.l + 2);
        c.require(r.g_value <= b + 1e-12, "homogeneous lambda " + fmt(lambda) + " l " + std::to_string(r.l));
      });
      ht::frank_wolfe(oo, 30, 0.0, [&](const MixingMatrix&, const ht::FwRecord& r) {
        const double b = 16.0 / static_cast<double>(r.l + 2) * (lambda + 1.0 - 1.0 / static_cast<double>(k));
        c.require(r.g_value <= b + 1e-12, "one class lambda " + fmt(lambda) + " l " + std::to_string(r.l));
      });
    }
  });

  criterion(4, "Hungarian cost equals exhaustive enumeration", 10.0, [](Check& c) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> u(-2048, 2048);
    for (int trial = 0; trial < 400; ++trial) {
      const std::size_t n = trial < 200 ? 5 : 6;
      Matrix cost(n, n);
      // Dyadic entries make every partial sum exact, so equality is exact.
      for (double& v : cost.data()) v = u(rng) / 1024.0;
      const auto res = ht::solve_assignment(cost);
      const auto brute = oracle::brute_force_assignment(cost);
      c.require(res.cost == brute.cost, "trial " + std::to_string(trial) + ": " + fmt(res.cost) + " vs " +
                                            fmt(brute.cost));
    }
  });

  criterion(5, "Closed-form line search against a 1e-6 grid", 0.0, [](Check& c) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> un(3, 8), uk(2, 5);
    std::uniform_real_distribution<double> ul(-2.0, 0.5);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = un(rng), k = uk(rng);
      const Matrix pi = oracle::random_proportions(n, k, rng);
      const double lambda = std::pow(10.0, ul(rng));
      const ht::TopoObjective obj(ClassProportions::validate(pi), lambda);
      const auto w = MixingMatrix::validate(oracle::random_doubly_stochastic(n, 1 + trial % 4, rng));
      const auto p = ht::to_matrix(ht::Permutation(oracle::random_permutation(n, rng)));
      const double gamma = ht::line_search(w, p, obj);
      const auto grid = oracle::grid_line_search(w.matrix(), p.matrix(), pi, lambda, 1e-6);
      const std::string where = "trial " + std::to_string(trial);
      c.require(std::abs(gamma - grid.argmin) <= 2e-6, where + ": gamma " + fmt(gamma) + " grid " + fmt(grid.argmin));
      const double g = oracle::scalar_g(oracle::blend(w.matrix(), p.matrix(), gamma), pi, lambda);
      c.require(g <= grid.min_value + 1e-12, where + ": g above grid minimum");
    }
  });

  criterion(6, "Mixing parameter values, Frobenius sandwich and ring scaling", 0.0, [](Check& c) {
    for (std::size_t n : {2u, 8u, 20u}) {
      const double pc = ht::mixing_parameter(ht::make_topology(TopologyKind::complete, n));
      const double pi = ht::mixing_parameter(ht::make_topology(TopologyKind::identity, n));
      c.require(std::abs(pc - 1.0) <= 1e-9, "p(complete) " + fmt(pc));
      c.require(std::abs(pi) <= 1e-9, "p(identity) " + fmt(pi));
    }
    std::vector<MixingMatrix> pool;
    std::mt19937_64 rng(6);
    for (int t = 0; t < 5; ++t) {
      const auto pi = ht::dirichlet_proportions(12, 4, 0.3 + t, 60 + static_cast<std::uint64_t>(t));
      ht::frank_wolfe(ht::TopoObjective(pi, 0.1), 10, 0.0,
                      [&](const MixingMatrix& w, const ht::FwRecord&) { pool.push_back(w); });
    }
    while (pool.size() < 100) {
      std::uniform_int_distribution<std::size_t> un(2, 12), ut(1, 6);
      pool.push_back(MixingMatrix::validate(oracle::random_doubly_stochastic(un(rng), ut(rng), rng)));
    }
    for (std::size_t idx = 0; idx < pool.size(); ++idx) {
      const auto& w = pool[idx];
      const double p = ht::mixing_parameter(w);
      const double f = ht::frob_dist_to_uniform(w);
      const double nm1 = static_cast<double>(w.n() - 1);
      c.require(1.0 - p <= f + 1e-6 && f <= nm1 * (1.0 - p) + 1e-6, "sandwich fails on matrix " + std::to_string(idx));
    }
    for (std::size_t n : {8u, 16u}) {
      const double r = ht::mixing_parameter(ht::make_topology(TopologyKind::alternating_ring, n)) /
                       ht::mixing_parameter(ht::make_topology(TopologyKind::alternating_ring, 2 * n));
      c.require(r >= 3.0 && r <= 5.0, "p(" + std::to_string(n) + ")/p(" + std::to_string(2 * n) + ") = " + fmt(r));
    }
  });

  criterion(7, "Complete-graph D-SGD equals centralized SGD byte for byte", 0.0, [](Check& c) {
    ht::LabelSkewParams lp;
    lp.n = 8;
    lp.classes = 3;
    lp.features = 2;
    const std::vector<ht::ProblemSpec> specs{ht::make_mean_estimation(16, 10.0, 1.0),
                                             ht::make_label_skew(lp, ht::dirichlet_proportions(8, 3, 0.3, 7), 7)};
    for (const auto& spec : specs)
      for (std::uint64_t s : {1u, 2u}) {
        ht::SimConfig cfg;
        cfg.T = 1000;
        cfg.stepsize = 0.05;
        cfg.seed = s;
        cfg.record_every = 1;
        const auto a = ht::io::trace_to_csv(ht::run_dsgd(spec, ht::make_topology(TopologyKind::complete, spec.n), cfg));
        const auto b = ht::io::trace_to_csv(ht::run_centralized(spec, cfg));
        c.require(a == b, std::string(ht::to_string(spec.kind)) + " seed " + std::to_string(s) + ": traces differ");
      }
  });

  criterion(8, "Alternating ring reaches the target before the clustered ring", 120.0, [](Check& c) {
    const std::size_t n = 16;
    const auto spec = ht::make_mean_estimation(n, 10.0, 1.0);
    const auto alt = ht::make_topology(TopologyKind::alternating_ring, n);
    const auto clu = ht::make_topology(TopologyKind::clustered_ring, n);
    const double eta = ht::mixing_parameter(alt) / (8.0 * spec.L);
    std::vector<double> ha, hc, na, nc;
    for (std::uint64_t s = 1; s <= 20; ++s) {
      ht::SimConfig cfg;
      cfg.T = 20000;
      cfg.stepsize = eta;
      cfg.seed = s;
      cfg.record_every = 10;
      const auto ta = ht::run_dsgd(spec, alt, cfg);
      const auto tc = ht::run_dsgd(spec, clu, cfg);
      ha.push_back(hit_or_inf(ht::iterations_to_eps(ta, 1e-2)));
      hc.push_back(hit_or_inf(ht::iterations_to_eps(tc, 1e-2)));
      na.push_back(hit_or_inf(ht::iterations_to_eps_node_average(ta, 1e-2, n)));
      nc.push_back(hit_or_inf(ht::iterations_to_eps_node_average(tc, 1e-2, n)));
    }
    const double ma = median(ha), mc = median(hc);
    std::printf("  info: eta %.6g; median iterations, mean iterate: alternating %s, clustered %s\n", eta,
                fmt(ma).c_str(), fmt(mc).c_str());
    std::printf("  info: median iterations, node-averaged gap: alternating %s, clustered %s\n",
                fmt(median(na)).c_str(), fmt(median(nc)).c_str());
    c.require(ma < mc, "alternating " + fmt(ma) + " not below clustered " + fmt(mc));
  });

  criterion(9, "Measured heterogeneity stays under both upper bounds", 0.0, [](Check& c) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uc(-5.0, 5.0), us(0.1, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 4 + static_cast<std::size_t>(trial % 5);
      ht::ProblemSpec spec;
      if (trial % 2 == 0) {
        std::vector<std::vector<double>> centers(n, std::vector<double>(2));
        std::vector<double> sig(n);
        for (std::size_t i = 0; i < n; ++i) {
          for (double& v : centers[i]) v = uc(rng);
          sig[i] = us(rng);
        }
        spec = ht::make_mean_estimation_custom(centers, sig);
      } else {
        ht::LabelSkewParams lp;
        lp.n = n;
        lp.classes = 3;
        lp.features = 2;
        lp.points_per_dim = 12;
        spec = ht::make_label_skew(lp, ht::dirichlet_proportions(n, 3, 0.5, 900 + static_cast<std::uint64_t>(trial)),
                                   static_cast<std::uint64_t>(trial));
      }
      const auto w = MixingMatrix::validate(oracle::random_doubly_stochastic(n, 1 + trial % 3, rng));
      const auto probes = ht::default_probes(spec, w, static_cast<std::uint64_t>(trial), 10);
      ht::SamplingOptions opt;
      opt.samples = 4000;
      opt.seed = 90 + static_cast<std::uint64_t>(trial);
      const auto rep = ht::measure(w, spec.objectives, probes, opt);
      const double slack = 5.0 * rep.H_stderr;
      const std::string where = "trial " + std::to_string(trial);
      c.require(rep.H_hat <= rep.bias_term + rep.variance_term + slack, where + ": above bias-variance bound");
      c.require(rep.H_hat <= rep.tau_bar_sq_prop1 + slack, where + ": above local-heterogeneity bound");
      if (spec.proportions && spec.model) {
        const double B = ht::estimate_B(*spec.model, probes);
        const auto lsb = ht::label_skew_bound(w, *spec.proportions, B, rep.sigma_max_sq_hat);
        const double direct = static_cast<double>(lsb.K) * B *
                              oracle::scalar_g(w.matrix(), spec.proportions->matrix(), 0.0);
        c.require(std::abs(lsb.bias_bound - direct) <= 1e-12, where + ": label-skew bias " + fmt(lsb.bias_bound) +
                                                                   " vs " + fmt(direct));
      }
    }
  });

  criterion(10, "Topology gradient and objective oracle properties", 0.0, [](Check& c) {
    std::mt19937_64 rng(10);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 3 + static_cast<std::size_t>(trial % 6), k = 2 + static_cast<std::size_t>(trial % 4);
      const Matrix pi = oracle::random_proportions(n, k, rng);
      const double lambda = 0.02 * (trial + 1);
      const ht::TopoObjective obj(ClassProportions::validate(pi), lambda);
      const auto w = MixingMatrix::validate(oracle::random_doubly_stochastic(n, 3, rng));
      const Matrix grad = ht::g_gradient(w, obj);
      for (int dir = 0; dir < 5; ++dir) {
        const Matrix d = oracle::random_matrix(n, n, -1.0, 1.0, rng);
        Matrix plus = w.matrix(), minus = w.matrix();
        for (std::size_t a = 0; a < d.data().size(); ++a) {
          plus.data()[a] += h * d.data()[a];
          minus.data()[a] -= h * d.data()[a];
        }
        const double fd = (oracle::scalar_g(plus, pi, lambda) - oracle::scalar_g(minus, pi, lambda)) / (2.0 * h);
        const double an = ht::frobenius_dot(grad, d);
        c.require(std::abs(fd - an) < 1e-6 * std::max(std::abs(an), 1e-3),
                  "trial " + std::to_string(trial) + ": directional derivative " + fmt(an) + " vs " + fmt(fd));
      }
    }
    ht::MeanEstimationParams mp;
    mp.n = 4;
    mp.m = 3.0;
    mp.sigma_tilde_sq = 2.0;
    mp.dim = 2;
    objective_properties(c, ht::make_mean_estimation(mp), rng, 4.0, 0);
    ht::LabelSkewParams lp;
    lp.n = 3;
    lp.classes = 3;
    lp.features = 2;
    objective_properties(c, ht::make_label_skew(lp, ht::dirichlet_proportions(3, 3, 1.0, 8), 8), rng, 1.0, 100);
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
