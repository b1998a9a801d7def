#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetero_topo/errors.hpp"
#include "hetero_topo/matrix.hpp"
#include "hetero_topo/rng.hpp"

namespace hetero_topo {

inline constexpr double kDefaultStochasticTol = 1e-9;
inline constexpr double kEntryBoundTol = 1e-12;

/// Nonnegative doubly stochastic n x n matrix: the communication topology.
/// Only obtainable through validate() (or the exact constructors below), so
/// holding one is proof the invariants were checked.
class MixingMatrix {
 public:
  /// Checks bounds first, then rows, then columns; the first violation found
  /// is reported with its index and residual.
  static MixingMatrix validate(Matrix entries, double tol = kDefaultStochasticTol) {
    if (!entries.square()) throw DimensionMismatch("mixing matrix must be square");
    const std::size_t n = entries.rows();
    if (n == 0) throw DimensionMismatch("mixing matrix needs n >= 1");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = entries(i, j);
        if (!std::isfinite(v) || v < -kEntryBoundTol || v > 1.0 + kEntryBoundTol) throw NegativeEntry(i, j, v);
      }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += entries(i, j);
      if (std::abs(s - 1.0) > tol) throw RowSumViolation(i, s - 1.0);
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += entries(i, j);
      if (std::abs(s - 1.0) > tol) throw ColSumViolation(j, s - 1.0);
    }
    return MixingMatrix(std::move(entries));
  }

  std::size_t n() const noexcept { return w_.rows(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return w_(i, j); }
  const Matrix& matrix() const noexcept { return w_; }

  friend bool operator==(const MixingMatrix&, const MixingMatrix&) = default;

 private:
  explicit MixingMatrix(Matrix w) : w_(std::move(w)) {}
  Matrix w_;
};

enum class TopologyKind { complete, identity, alternating_ring, clustered_ring, ring, custom_weights };

inline std::string_view to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::complete: return "complete";
    case TopologyKind::identity: return "identity";
    case TopologyKind::alternating_ring: return "alternating_ring";
    case TopologyKind::clustered_ring: return "clustered_ring";
    case TopologyKind::ring: return "ring";
    case TopologyKind::custom_weights: return "custom_weights";
  }
  return "unknown";
}

inline std::optional<TopologyKind> parse_topology_kind(std::string_view s) {
  for (auto k : {TopologyKind::complete, TopologyKind::identity, TopologyKind::alternating_ring,
                 TopologyKind::clustered_ring, TopologyKind::ring, TopologyKind::custom_weights})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace detail {

// Ring over the node sequence `order`: self weight 1/2, 1/4 to each ring
// neighbour. Accumulates, so n = 1 and n = 2 stay doubly stochastic.
inline Matrix ring_over(const std::vector<std::size_t>& order) {
  const std::size_t n = order.size();
  Matrix w(n, n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    w(i, i) += 0.5;
    w(i, order[(pos + 1) % n]) += 0.25;
    w(i, order[(pos + n - 1) % n]) += 0.25;
  }
  return w;
}

}  // namespace detail

/// Relabels nodes: result(perm[i], perm[j]) = W(i, j).
inline MixingMatrix permute_nodes(const MixingMatrix& w, const std::vector<std::size_t>& perm) {
  const std::size_t n = w.n();
  if (perm.size() != n) throw DimensionMismatch("permutation length differs from n");
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(perm[i], perm[j]) = w(i, j);
  return MixingMatrix::validate(std::move(out));
}

/// Canonical topologies. Node i (0-based) is "odd" in 1-based numbering when
/// i is even; the alternating ring is the ring in index order, so parities
/// alternate around it. The clustered ring uses the same weights but visits
/// all even indices first, then all odd ones, so each parity class forms a
/// contiguous arc. `custom_weights` validates `weights`.
inline MixingMatrix make_topology(TopologyKind kind, std::size_t n, const Matrix* weights = nullptr) {
  if (n == 0) throw InvalidArgument("topology needs n >= 1");
  switch (kind) {
    case TopologyKind::complete: return MixingMatrix::validate(Matrix(n, n, 1.0 / static_cast<double>(n)));
    case TopologyKind::identity: return MixingMatrix::validate(Matrix::identity(n));
    case TopologyKind::ring: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      return MixingMatrix::validate(detail::ring_over(order));
    }
    case TopologyKind::alternating_ring: {
      if (n % 2 != 0) throw OddNForAlternatingRing(n);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      return MixingMatrix::validate(detail::ring_over(order));
    }
    case TopologyKind::clustered_ring: {
      if (n % 2 != 0) throw OddNForAlternatingRing(n);
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < n; i += 2) order.push_back(i);
      for (std::size_t i = 1; i < n; i += 2) order.push_back(i);
      return MixingMatrix::validate(detail::ring_over(order));
    }
    case TopologyKind::custom_weights:
      if (weights == nullptr) throw InvalidArgument("custom_weights topology needs a weight matrix");
      if (weights->rows() != n) throw DimensionMismatch("custom weights do not match n");
      return MixingMatrix::validate(*weights);
  }
  throw InvalidArgument("unknown topology kind");
}

/// Squared Frobenius distance to the uniform averaging matrix (1/n) 11^T.
inline double frob_dist_to_uniform(const MixingMatrix& w) {
  const std::size_t n = w.n();
  const double u = 1.0 / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = w(i, j) - u;
      s += d * d;
    }
  return s;
}

struct DegreeReport {
  std::size_t d_in_max = 0;   // max_i #{j : W_ji > 0}, self-loops included
  std::size_t d_out_max = 0;  // max_i #{j : W_ij > 0}, self-loops included
  std::size_t edge_count = 0; // strictly positive off-diagonal entries
  std::size_t max_in_neighbors = 0;   // as d_in_max but without the self-loop
  std::size_t max_out_neighbors = 0;  // as d_out_max but without the self-loop
};

/// Degrees with an exact `> 0` edge test on stored values.
inline DegreeReport degrees(const MixingMatrix& w) {
  const std::size_t n = w.n();
  DegreeReport r;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t in = 0, out = 0, in_nb = 0, out_nb = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (w(j, i) > 0.0) {
        ++in;
        if (j != i) ++in_nb;
      }
      if (w(i, j) > 0.0) {
        ++out;
        if (j != i) {
          ++out_nb;
          ++r.edge_count;
        }
      }
    }
    r.d_in_max = std::max(r.d_in_max, in);
    r.d_out_max = std::max(r.d_out_max, out);
    r.max_in_neighbors = std::max(r.max_in_neighbors, in_nb);
    r.max_out_neighbors = std::max(r.max_out_neighbors, out_nb);
  }
  return r;
}

struct PowerIterationOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 100000;
  std::uint64_t seed = 0x5eedULL;
};

/// p = 1 - lambda_2(W^T W), computed as 1 - lambda_max(W^T W - (1/n) 11^T) by
/// power iteration restricted to the complement of the constant vector.
/// Converged when successive Rayleigh quotients differ by less than `tol`.
inline double mixing_parameter(const MixingMatrix& w, const PowerIterationOptions& opt = {}) {
  const std::size_t n = w.n();
  if (n == 1) return 1.0;
  const Matrix& a = w.matrix();

  auto project_out_ones = [n](std::vector<double>& x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    for (double& v : x) v -= mean;
  };
  auto normalize = [](std::vector<double>& x) {
    const double nrm = std::sqrt(norm_sq(x));
    if (nrm > 0.0)
      for (double& v : x) v /= nrm;
    return nrm;
  };

  StreamRng rng(opt.seed, StreamDomain::power_iteration, n);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (double& v : x) v = normal(rng);
  project_out_ones(x);
  if (normalize(x) == 0.0) return 1.0;

  std::vector<double> wx(n), y(n);
  double prev = -1.0;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    // y = W^T W x; x is orthogonal to 1 so the deflation term vanishes up to
    // rounding, which project_out_ones removes.
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x[j];
      wx[i] = s;
    }
    const double rayleigh = norm_sq(wx);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) y[j] += a(i, j) * wx[i];
    project_out_ones(y);
    if (std::abs(rayleigh - prev) < opt.tol) return std::clamp(1.0 - rayleigh, 0.0, 1.0);
    prev = rayleigh;
    if (normalize(y) == 0.0) return 1.0;
    x.swap(y);
  }
  throw NoConvergence("mixing_parameter power iteration", opt.max_iterations, std::abs(prev), x);
}

/// Repetition policy for time-varying topologies.
enum class SchedulePolicy { fixed, cyclic, sequence };

class MixingSchedule {
 public:
  static MixingSchedule fixed(MixingMatrix w) { return MixingSchedule({std::move(w)}, SchedulePolicy::fixed); }
  static MixingSchedule cyclic(std::vector<MixingMatrix> ws) { return MixingSchedule(std::move(ws), SchedulePolicy::cyclic); }
  /// Each matrix used once, in order; running past the end throws.
  static MixingSchedule sequence(std::vector<MixingMatrix> ws) {
    return MixingSchedule(std::move(ws), SchedulePolicy::sequence);
  }

  const MixingMatrix& at(std::size_t t) const {
    switch (policy_) {
      case SchedulePolicy::fixed: return matrices_.front();
      case SchedulePolicy::cyclic: return matrices_[t % matrices_.size()];
      case SchedulePolicy::sequence:
        if (t >= matrices_.size()) throw ScheduleExhausted(t, matrices_.size());
        return matrices_[t];
    }
    return matrices_.front();
  }

  std::size_t n() const noexcept { return matrices_.front().n(); }
  std::size_t size() const noexcept { return matrices_.size(); }
  SchedulePolicy policy() const noexcept { return policy_; }
  const std::vector<MixingMatrix>& matrices() const noexcept { return matrices_; }

 private:
  MixingSchedule(std::vector<MixingMatrix> ws, SchedulePolicy policy)
      : matrices_(std::move(ws)), policy_(policy) {
    if (matrices_.empty()) throw InvalidArgument("mixing schedule needs at least one matrix");
    for (const auto& m : matrices_)
      if (m.n() != matrices_.front().n()) throw DimensionMismatch("schedule matrices differ in n");
    if (policy_ == SchedulePolicy::fixed && matrices_.size() != 1)
      throw InvalidArgument("fixed schedule holds exactly one matrix");
  }

  std::vector<MixingMatrix> matrices_;
  SchedulePolicy policy_;
};

}  // namespace hetero_topo
