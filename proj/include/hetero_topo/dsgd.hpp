#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/mixing.hpp"
#include "hetero_topo/parallel.hpp"
#include "hetero_topo/problems.hpp"
#include "hetero_topo/rng.hpp"

namespace hetero_topo {

/// eta = min{(r0/(b(T+1)))^{1/2}, (r0/(e(T+1)))^{1/3}, 1/d}; a term whose
/// coefficient is zero drops out.
inline double tuned_stepsize(double r0, double b, double e, double d, std::size_t T) {
  if (!(d > 0.0)) throw NonPositiveD();
  if (r0 < 0.0 || b < 0.0 || e < 0.0) throw InvalidArgument("tuned stepsize parameters must be >= 0");
  const double t1 = static_cast<double>(T) + 1.0;
  double eta = 1.0 / d;
  if (b > 0.0) eta = std::min(eta, std::sqrt(r0 / (b * t1)));
  if (e > 0.0) eta = std::min(eta, std::cbrt(r0 / (e * t1)));
  return eta;
}

/// ceil(36 sigma^2 r0/(n eps^2) + 89 sqrt(L) tau r0/(p eps^{3/2}) + 24 L r0/(p eps)).
inline std::uint64_t iteration_budget(double epsilon, double r0, double sigma_bar_sq, double tau_bar_sq, double L,
                                      double p, std::size_t n) {
  if (!(p > 0.0) || p > 1.0) throw ZeroP();
  if (!(epsilon > 0.0) || n == 0) throw InvalidArgument("iteration budget needs eps > 0 and n >= 1");
  if (r0 < 0.0 || sigma_bar_sq < 0.0 || tau_bar_sq < 0.0 || L < 0.0)
    throw InvalidArgument("iteration budget inputs must be >= 0");
  const double tau = std::sqrt(tau_bar_sq);
  const double t = 36.0 * sigma_bar_sq * r0 / (static_cast<double>(n) * epsilon * epsilon) +
                   89.0 * std::sqrt(L) * tau * r0 / (p * std::pow(epsilon, 1.5)) + 24.0 * L * r0 / (p * epsilon);
  return static_cast<std::uint64_t>(std::ceil(t));
}

struct TunedStepsize {
  double r0 = 0.0;
  double b = 0.0;
  double e = 0.0;
  double d = 1.0;
};

struct SimRecord {
  std::size_t t = 0;
  double f_bar_gap = 0.0;     // f(mean iterate) - f*
  double consensus_sq = 0.0;  // ||Theta - Theta_bar||_F^2
  std::vector<double> mean_iterate;
  std::int64_t wall_ns = 0;   // elapsed since the run started; never serialized
};

struct SimConfig {
  std::size_t T = 1000;
  std::variant<double, TunedStepsize> stepsize = 0.01;
  std::uint64_t seed = 0;
  std::size_t record_every = 10;
  std::optional<std::vector<double>> theta0;  // overrides the problem's starting point
  /// Receives every record as it is produced.
  std::function<void(const SimRecord&)> sink;
  /// When false only the sink sees records.
  bool keep_records = true;
};

struct SimTrace {
  std::vector<SimRecord> records;
  double eta = 0.0;
  std::vector<std::string> warnings;
};

inline double resolve_stepsize(const SimConfig& cfg) {
  if (const double* eta = std::get_if<double>(&cfg.stepsize)) {
    if (!(*eta >= 0.0) || !std::isfinite(*eta)) throw InvalidArgument("stepsize must be finite and >= 0");
    return *eta;
  }
  const auto& t = std::get<TunedStepsize>(cfg.stepsize);
  return tuned_stepsize(t.r0, t.b, t.e, t.d, cfg.T);
}

namespace detail {

// out = sum_j w[j] * x_j over rows of `x` (n x d node-major), j ascending,
// zero weights skipped. Decentralized and centralized runs both reduce
// through here, which keeps them bit-identical on the complete graph.
inline void weighted_row_sum(std::span<const double> weights, const std::vector<double>& x, std::size_t d,
                             std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double wj = weights[j];
    if (wj == 0.0) continue;
    for (std::size_t a = 0; a < d; ++a) out[a] += wj * x[j * d + a];
  }
}

// theta_0 + (1/n) sum_i (theta_i - theta_0): exact when all nodes agree.
inline void shifted_mean(const std::vector<double>& theta, std::size_t n, std::size_t d, std::span<double> out) {
  for (std::size_t a = 0; a < d; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += theta[i * d + a] - theta[a];
    out[a] = theta[a] + s / static_cast<double>(n);
  }
}

inline double consensus_distance(const std::vector<double>& theta, std::size_t n, std::size_t d,
                                 std::span<const double> mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double dev = theta[i * d + a] - mean[a];
      s += dev * dev;
    }
  return s;
}

inline bool record_due(std::size_t t, std::size_t T, std::size_t every) {
  return t == 0 || t == T || (every > 0 && t % every == 0);
}

inline std::vector<double> starting_point(const ProblemSpec& spec, const SimConfig& cfg) {
  std::vector<double> theta0 = cfg.theta0 ? *cfg.theta0 : spec.theta0;
  if (theta0.size() != spec.dimension()) throw DimensionMismatch("theta0 dimension differs from the problem");
  return theta0;
}

inline std::size_t node_threads(std::size_t n, std::size_t d) {
  return n * d >= 4096 ? worker_threads() : 1;
}

class Recorder {
 public:
  Recorder(const ProblemSpec& spec, const SimConfig& cfg, SimTrace& trace)
      : spec_(spec), cfg_(cfg), trace_(trace), start_(std::chrono::steady_clock::now()) {}

  void operator()(std::size_t t, const std::vector<double>& theta, std::size_t n, std::size_t d) {
    SimRecord r;
    r.t = t;
    r.mean_iterate.resize(d);
    shifted_mean(theta, n, d, r.mean_iterate);
    r.consensus_sq = consensus_distance(theta, n, d, r.mean_iterate);
    r.f_bar_gap = spec_.gap(r.mean_iterate);
    r.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count();
    if (cfg_.sink) cfg_.sink(r);
    if (cfg_.keep_records) trace_.records.push_back(std::move(r));
  }

 private:
  const ProblemSpec& spec_;
  const SimConfig& cfg_;
  SimTrace& trace_;
  std::chrono::steady_clock::time_point start_;
};

inline void stepsize_warning(const ProblemSpec& spec, const MixingSchedule& schedule, double eta, SimTrace& trace) {
  // Checked over the distinct matrices of short schedules only.
  if (schedule.size() > 64) return;
  double p = 1.0;
  for (const auto& w : schedule.matrices()) p = std::min(p, mixing_parameter(w));
  const double eta_max = p / (8.0 * spec.L);
  if (eta > eta_max) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "stepsize %.6g exceeds p/(8L) = %.6g (p = %.6g, L = %.6g)", eta, eta_max, p,
                  spec.L);
    trace.warnings.emplace_back(buf);
  }
}

}  // namespace detail

/// Synchronous decentralized SGD: every node takes a local stochastic step,
/// then every node averages its neighbors' half-step values with row i of
/// W^(t). Node i's draw at step t comes from stream (seed, i, t).
inline SimTrace run_dsgd(const ProblemSpec& spec, const MixingSchedule& schedule, const SimConfig& cfg) {
  const std::size_t n = spec.n;
  if (schedule.n() != n) throw DimensionMismatch("schedule n differs from problem n");
  const std::size_t d = spec.dimension();
  SimTrace trace;
  trace.eta = resolve_stepsize(cfg);
  detail::stepsize_warning(spec, schedule, trace.eta, trace);
  const double eta = trace.eta;

  const std::vector<double> theta0 = detail::starting_point(spec, cfg);
  std::vector<double> theta(n * d), half(n * d);
  for (std::size_t i = 0; i < n; ++i) std::copy(theta0.begin(), theta0.end(), theta.begin() + i * d);

  detail::Recorder record(spec, cfg, trace);
  record(0, theta, n, d);
  const std::size_t threads = detail::node_threads(n, d);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    const MixingMatrix& w = schedule.at(t);
    parallel_for(
        n,
        [&](std::size_t i) {
          DataPoint z;
          StreamRng rng(cfg.seed, StreamDomain::dsgd, i, t);
          spec.objectives[i]->sample(rng, z);
          std::span<const double> ti(theta.data() + i * d, d);
          std::span<double> hi(half.data() + i * d, d);
          spec.objectives[i]->stoch_grad(ti, z, hi);
          for (std::size_t a = 0; a < d; ++a) hi[a] = ti[a] - eta * hi[a];
        },
        threads);
    parallel_for(
        n,
        [&](std::size_t i) {
          detail::weighted_row_sum(w.matrix().row(i), half, d, std::span<double>(theta.data() + i * d, d));
        },
        threads);
    if (detail::record_due(t + 1, cfg.T, cfg.record_every)) record(t + 1, theta, n, d);
  }
  return trace;
}

inline SimTrace run_dsgd(const ProblemSpec& spec, const MixingMatrix& w, const SimConfig& cfg) {
  return run_dsgd(spec, MixingSchedule::fixed(w), cfg);
}

/// Centralized parallel SGD: one iterate, updated with the average of the n
/// per-node stochastic steps drawn from the same streams as run_dsgd.
inline SimTrace run_centralized(const ProblemSpec& spec, const SimConfig& cfg) {
  const std::size_t n = spec.n;
  const std::size_t d = spec.dimension();
  SimTrace trace;
  trace.eta = resolve_stepsize(cfg);
  const double eta = trace.eta;

  std::vector<double> theta = detail::starting_point(spec, cfg);
  std::vector<double> half(n * d);
  const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));

  detail::Recorder record(spec, cfg, trace);
  record(0, theta, 1, d);
  const std::size_t threads = detail::node_threads(n, d);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    parallel_for(
        n,
        [&](std::size_t i) {
          DataPoint z;
          StreamRng rng(cfg.seed, StreamDomain::dsgd, i, t);
          spec.objectives[i]->sample(rng, z);
          std::span<double> hi(half.data() + i * d, d);
          spec.objectives[i]->stoch_grad(theta, z, hi);
          for (std::size_t a = 0; a < d; ++a) hi[a] = theta[a] - eta * hi[a];
        },
        threads);
    detail::weighted_row_sum(uniform, half, d, theta);
    if (detail::record_due(t + 1, cfg.T, cfg.record_every)) record(t + 1, theta, 1, d);
  }
  return trace;
}

/// First recorded t whose running average of f_bar_gap over the records so
/// far is <= eps.
inline std::optional<std::size_t> iterations_to_eps(const SimTrace& trace, double eps) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : trace.records) {
    sum += r.f_bar_gap;
    ++count;
    if (sum / static_cast<double>(count) <= eps) return r.t;
  }
  return std::nullopt;
}

/// Same rule applied to the node-averaged gap f(theta_bar) - f* + consensus/n,
/// which equals (1/n) sum_i (f(theta_i) - f*) for the quadratic problems.
inline std::optional<std::size_t> iterations_to_eps_node_average(const SimTrace& trace, double eps, std::size_t n) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : trace.records) {
    sum += r.f_bar_gap + r.consensus_sq / static_cast<double>(n);
    ++count;
    if (sum / static_cast<double>(count) <= eps) return r.t;
  }
  return std::nullopt;
}

struct ConsensusCheck {
  double running_average = 0.0;  // mean consensus_sq over records
  double limit = 0.0;            // 1.5 * 24 eta^2 n tau^2 / p^2
  bool within = true;
};

/// Soft check of the consensus recursion: the caller reports, never aborts.
inline ConsensusCheck consensus_soft_check(const SimTrace& trace, double eta, std::size_t n, double tau_hat_sq,
                                           double p) {
  ConsensusCheck c;
  if (trace.records.empty() || !(p > 0.0)) return c;
  double s = 0.0;
  for (const auto& r : trace.records) s += r.consensus_sq;
  c.running_average = s / static_cast<double>(trace.records.size());
  c.limit = 1.5 * 24.0 * eta * eta * static_cast<double>(n) * tau_hat_sq / (p * p);
  c.within = c.running_average <= c.limit;
  return c;
}

/// Default probe set: theta0, theta*, and 8 mean iterates spread over a short
/// D-SGD run on `w`.
inline std::vector<std::vector<double>> default_probes(const ProblemSpec& spec, const MixingMatrix& w,
                                                       std::uint64_t seed, std::size_t trajectory_steps = 80) {
  std::vector<std::vector<double>> probes{spec.theta0, spec.theta_star};
  SimConfig cfg;
  cfg.T = trajectory_steps;
  cfg.record_every = std::max<std::size_t>(1, trajectory_steps / 8);
  cfg.seed = seed;
  cfg.stepsize = 1.0 / (8.0 * spec.L);
  const SimTrace trace = run_dsgd(spec, w, cfg);
  for (const auto& r : trace.records) {
    if (r.t == 0) continue;
    if (probes.size() >= 10) break;
    probes.push_back(r.mean_iterate);
  }
  return probes;
}

}  // namespace hetero_topo
