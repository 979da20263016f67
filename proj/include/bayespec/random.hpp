#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bayespec {

/// SplitMix64 finalizer; used to turn structured seed paths into
/// well-mixed 64-bit engine seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from a base seed and a path of indices, e.g.
/// derive_seed(master, {t_index, replication}).
[[nodiscard]] constexpr std::uint64_t derive_seed(
    std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

/// An independent random stream. Every replica owns one, so the variates
/// it sees do not depend on how replicas are scheduled across threads.
class Stream {
 public:
  explicit Stream(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

  /// Gamma variate with the given shape and scale (mean = shape * scale).
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  std::int64_t poisson(double rate) {
    return std::poisson_distribution<std::int64_t>(rate)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

  friend bool operator==(const Stream&, const Stream&) = default;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bayespec
