#pragma once

#include <cstdint>
#include <limits>

namespace hetero_topo {

namespace detail {

inline constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Domain tags keep streams used for different purposes apart even when the
/// remaining key components coincide.
enum class StreamDomain : std::uint64_t {
  dsgd = 1,
  heterogeneity = 2,
  unbiasedness = 3,
  dirichlet = 4,
  power_iteration = 5,
  generic = 6,
};

/// Counter-based random stream: the state is a hash of
/// (seed, domain, a, b, c), so any lane can be regenerated without replaying
/// the others. Output is SplitMix64. Satisfies UniformRandomBitGenerator so it
/// plugs into the <random> distributions.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t state) noexcept : state_(state) {}

  StreamRng(std::uint64_t seed, StreamDomain domain, std::uint64_t a = 0, std::uint64_t b = 0,
            std::uint64_t c = 0) noexcept
      : state_(mix(seed, domain, a, b, c)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::splitmix_finalize(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t seed, StreamDomain domain, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) noexcept {
    std::uint64_t h = detail::splitmix_finalize(seed + 0x632be59bd9b4e019ULL);
    for (std::uint64_t part : {static_cast<std::uint64_t>(domain), a, b, c})
      h = detail::splitmix_finalize(h ^ (part + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return h;
  }

 private:
  std::uint64_t state_;
};

}  // namespace hetero_topo
