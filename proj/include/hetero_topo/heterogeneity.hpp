#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/mixing.hpp"
#include "hetero_topo/parallel.hpp"
#include "hetero_topo/problems.hpp"
#include "hetero_topo/proportions.hpp"
#include "hetero_topo/rng.hpp"
#include "hetero_topo/topo_opt.hpp"

namespace hetero_topo {

using Probe = std::vector<double>;

/// Samples are reduced in fixed blocks of this size, then blocks in order,
/// so every estimate is independent of the worker count.
inline constexpr std::size_t kSampleBlock = 512;

struct MonteCarloEstimate {
  double value = 0.0;   // max over probes of the per-probe mean
  double stderr_ = 0.0; // standard error of the maximizing probe
  std::vector<double> per_probe;
  std::vector<double> per_probe_stderr;
};

/// Per-probe Monte Carlo output of one joint pass over all nodes.
struct ProbeSample {
  double h_mean = 0.0;
  double h_stderr = 0.0;
  std::vector<double> sigma_sq;  // unbiased per-node sample variance of the stochastic gradient
};

struct SamplingOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  /// stream_ids[i] keys node i's draws; defaults to i. Carrying ids along a
  /// node relabeling reproduces the same draws.
  std::vector<std::uint64_t> stream_ids;
};

namespace detail {

inline std::uint64_t stream_id(const SamplingOptions& opt, std::size_t i) {
  return opt.stream_ids.empty() ? i : opt.stream_ids.at(i);
}

inline void check_objectives(const std::vector<ObjectivePtr>& objectives, std::size_t n) {
  if (objectives.size() != n) throw DimensionMismatch("one objective per node required");
  if (objectives.empty()) throw DimensionMismatch("no objectives");
  const std::size_t d = objectives.front()->dimension();
  for (const auto& o : objectives)
    if (o->dimension() != d) throw DimensionMismatch("objectives differ in dimension");
}

// Neighborhood spread (1/n) sum_i ||sum_j W_ij g_j - (1/n) sum_j g_j||^2,
// g stored node-major (n x d). The mean accumulates u * g_j with u = 1/n in
// the same order as the rows, so a uniform row reproduces it bit for bit.
inline double neighborhood_spread(const Matrix& w, const std::vector<double>& g, std::size_t d,
                                  std::vector<double>& mean, std::vector<double>& agg) {
  const std::size_t n = w.rows();
  const double u = 1.0 / static_cast<double>(n);
  std::fill(mean.begin(), mean.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t a = 0; a < d; ++a) mean[a] += u * g[j * d + a];
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(agg.begin(), agg.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      for (std::size_t a = 0; a < d; ++a) agg[a] += wij * g[j * d + a];
    }
    for (std::size_t a = 0; a < d; ++a) {
      const double dev = agg[a] - mean[a];
      s += dev * dev;
    }
  }
  return s / static_cast<double>(n);
}

}  // namespace detail

/// One joint Monte Carlo pass at `theta`: draws (Z_1, ..., Z_n) `samples`
/// times from the per-(seed, node, probe, sample) streams and returns the
/// neighborhood-heterogeneity mean with its standard error plus per-node
/// gradient-noise variances.
inline ProbeSample sample_probe(const MixingMatrix& w, const std::vector<ObjectivePtr>& objectives,
                                const Probe& theta, std::size_t probe_index, const SamplingOptions& opt) {
  const std::size_t n = w.n();
  detail::check_objectives(objectives, n);
  const std::size_t d = objectives.front()->dimension();
  if (theta.size() != d) throw DimensionMismatch("probe dimension differs from objective dimension");
  if (opt.samples < 2) throw InvalidArgument("Monte Carlo needs at least 2 samples");

  // Shift by the expected gradient so the variance sums stay well conditioned.
  std::vector<double> shift(n * d);
  for (std::size_t i = 0; i < n; ++i)
    objectives[i]->expected_grad(theta, std::span<double>(shift.data() + i * d, d));

  struct Block {
    double h_sum = 0.0, h_sq = 0.0;
    std::vector<double> u_sum;   // n x d
    std::vector<double> u_sq;    // n
  };
  const std::size_t blocks = (opt.samples + kSampleBlock - 1) / kSampleBlock;
  std::vector<Block> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Block& blk = partial[b];
    blk.u_sum.assign(n * d, 0.0);
    blk.u_sq.assign(n, 0.0);
    std::vector<double> g(n * d), mean(d), agg(d);
    DataPoint z;
    const std::size_t lo = b * kSampleBlock;
    const std::size_t hi = std::min(opt.samples, lo + kSampleBlock);
    for (std::size_t s = lo; s < hi; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        StreamRng rng(opt.seed, StreamDomain::heterogeneity, detail::stream_id(opt, i), probe_index, s);
        objectives[i]->sample(rng, z);
        std::span<double> gi(g.data() + i * d, d);
        objectives[i]->stoch_grad(theta, z, gi);
        double sq = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          const double u = gi[a] - shift[i * d + a];
          blk.u_sum[i * d + a] += u;
          sq += u * u;
        }
        blk.u_sq[i] += sq;
      }
      const double h = detail::neighborhood_spread(w.matrix(), g, d, mean, agg);
      if (!std::isfinite(h)) throw SamplingFailure("non-finite stochastic gradient");
      blk.h_sum += h;
      blk.h_sq += h * h;
    }
  });

  double h_sum = 0.0, h_sq = 0.0;
  std::vector<double> u_sum(n * d, 0.0), u_sq(n, 0.0);
  for (const Block& blk : partial) {
    h_sum += blk.h_sum;
    h_sq += blk.h_sq;
    for (std::size_t k = 0; k < n * d; ++k) u_sum[k] += blk.u_sum[k];
    for (std::size_t i = 0; i < n; ++i) u_sq[i] += blk.u_sq[i];
  }
  const double s = static_cast<double>(opt.samples);
  ProbeSample out;
  out.h_mean = h_sum / s;
  const double h_var = std::max(0.0, (h_sq - h_sum * h_sum / s) / (s - 1.0));
  out.h_stderr = std::sqrt(h_var / s);
  out.sigma_sq.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum_sq = 0.0;
    for (std::size_t a = 0; a < d; ++a) sum_sq += u_sum[i * d + a] * u_sum[i * d + a];
    out.sigma_sq[i] = std::max(0.0, (u_sq[i] - sum_sq / s) / (s - 1.0));
  }
  return out;
}

/// Monte Carlo neighborhood heterogeneity: max over probes of
/// E (1/n) sum_i ||sum_j W_ij grad F_j(theta, Z_j) - (1/n) sum_j grad F_j(theta, Z_j)||^2.
inline MonteCarloEstimate estimate_H(const MixingMatrix& w, const std::vector<ObjectivePtr>& objectives,
                                     const std::vector<Probe>& probes, const SamplingOptions& opt) {
  if (probes.empty()) throw InvalidArgument("estimate_H needs at least one probe");
  MonteCarloEstimate est;
  est.value = -1.0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const ProbeSample ps = sample_probe(w, objectives, probes[p], p, opt);
    est.per_probe.push_back(ps.h_mean);
    est.per_probe_stderr.push_back(ps.h_stderr);
    if (ps.h_mean > est.value) {
      est.value = ps.h_mean;
      est.stderr_ = ps.h_stderr;
    }
  }
  return est;
}

/// (1/n) sum_i ||grad f_i(theta) - grad f(theta)||^2 at one point.
inline double local_heterogeneity_at(const std::vector<ObjectivePtr>& objectives, const Probe& theta) {
  const std::size_t n = objectives.size();
  const std::size_t d = theta.size();
  std::vector<double> g(n * d), mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    objectives[i]->expected_grad(theta, std::span<double>(g.data() + i * d, d));
    for (std::size_t a = 0; a < d; ++a) mean[a] += g[i * d + a];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double dev = g[i * d + a] - mean[a];
      s += dev * dev;
    }
  return s / static_cast<double>(n);
}

/// Max over probes of the local heterogeneity.
inline double estimate_zeta_bar_sq(const std::vector<ObjectivePtr>& objectives, const std::vector<Probe>& probes) {
  if (probes.empty()) throw InvalidArgument("estimate_zeta_bar_sq needs at least one probe");
  double best = 0.0;
  for (const auto& p : probes) best = std::max(best, local_heterogeneity_at(objectives, p));
  return best;
}

/// Max over probes of (1/n) sum_i ||sum_j W_ij grad f_j(theta) - grad f(theta)||^2.
inline double neighborhood_bias_term(const MixingMatrix& w, const std::vector<ObjectivePtr>& objectives,
                                     const std::vector<Probe>& probes) {
  const std::size_t n = w.n();
  detail::check_objectives(objectives, n);
  double best = 0.0;
  for (const auto& theta : probes) {
    const std::size_t d = theta.size();
    std::vector<double> g(n * d), mean(d), agg(d);
    for (std::size_t i = 0; i < n; ++i) objectives[i]->expected_grad(theta, std::span<double>(g.data() + i * d, d));
    best = std::max(best, detail::neighborhood_spread(w.matrix(), g, d, mean, agg));
  }
  return best;
}

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
};

/// Both terms of the bias-variance upper bound on H.
inline BiasVariance bias_variance_bound(const MixingMatrix& w, const std::vector<ObjectivePtr>& objectives,
                                        const std::vector<Probe>& probes, double sigma_max_sq) {
  return {neighborhood_bias_term(w, objectives, probes),
          sigma_max_sq / static_cast<double>(w.n()) * frob_dist_to_uniform(w)};
}

/// (1 - p)(zeta_bar^2 + sigma_bar^2).
inline double prop1_bound(double p, double zeta_bar_sq, double sigma_bar_sq) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  if (zeta_bar_sq < 0.0 || sigma_bar_sq < 0.0) throw InvalidArgument("heterogeneity inputs must be >= 0");
  return (1.0 - p) * (zeta_bar_sq + sigma_bar_sq);
}

struct LabelSkewBound {
  double B = 0.0;
  std::size_t K = 0;
  double bias_bound = 0.0;
  double variance_bound = 0.0;
  double total = 0.0;
};

/// K B times the topology-objective bias, plus (sigma_max^2/n)||W - 11^T/n||_F^2.
inline LabelSkewBound label_skew_bound(const MixingMatrix& w, const ClassProportions& pi, double B,
                                       double sigma_max_sq) {
  if (!(B > 0.0)) throw InvalidArgument("B must be positive");
  if (sigma_max_sq < 0.0) throw InvalidArgument("sigma_max_sq must be >= 0");
  LabelSkewBound r;
  r.B = B;
  r.K = pi.classes();
  r.bias_bound = static_cast<double>(r.K) * B * neighborhood_bias(w, pi);
  r.variance_bound = sigma_max_sq / static_cast<double>(w.n()) * frob_dist_to_uniform(w);
  r.total = r.bias_bound + r.variance_bound;
  return r;
}

struct HeterogeneityReport {
  double H_hat = 0.0;
  double H_stderr = 0.0;
  double zeta_bar_sq_hat = 0.0;
  double sigma_bar_sq_hat = 0.0;
  double sigma_max_sq_hat = 0.0;
  double bias_term = 0.0;
  double variance_term = 0.0;
  double p = 0.0;
  double tau_bar_sq_prop1 = 0.0;
  std::vector<Probe> probe_points;
  std::vector<double> H_per_probe;
  std::size_t samples_per_node = 0;
};

/// Every heterogeneity quantity for one topology at the given probes, from a
/// single joint sampling pass per probe.
inline HeterogeneityReport measure(const MixingMatrix& w, const std::vector<ObjectivePtr>& objectives,
                                   const std::vector<Probe>& probes, const SamplingOptions& opt) {
  if (probes.empty()) throw InvalidArgument("measure needs at least one probe");
  HeterogeneityReport r;
  r.probe_points = probes;
  r.samples_per_node = opt.samples;
  r.H_hat = -1.0;
  const double n = static_cast<double>(w.n());
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const ProbeSample ps = sample_probe(w, objectives, probes[p], p, opt);
    r.H_per_probe.push_back(ps.h_mean);
    if (ps.h_mean > r.H_hat) {
      r.H_hat = ps.h_mean;
      r.H_stderr = ps.h_stderr;
    }
    double bar = 0.0;
    for (double s : ps.sigma_sq) {
      bar += s;
      r.sigma_max_sq_hat = std::max(r.sigma_max_sq_hat, s);
    }
    r.sigma_bar_sq_hat = std::max(r.sigma_bar_sq_hat, bar / n);
  }
  r.zeta_bar_sq_hat = estimate_zeta_bar_sq(objectives, probes);
  const BiasVariance bv = bias_variance_bound(w, objectives, probes, r.sigma_max_sq_hat);
  r.bias_term = bv.bias;
  r.variance_term = bv.variance;
  r.p = mixing_parameter(w);
  r.tau_bar_sq_prop1 = prop1_bound(r.p, r.zeta_bar_sq_hat, r.sigma_bar_sq_hat);
  return r;
}

}  // namespace hetero_topo
