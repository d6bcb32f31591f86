#pragma once

#include <cstdint>
#include <random>

namespace basket_dae {

/// splitmix64 finalizer; used to derive well-separated substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random source.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// converts raw words to uniforms/integers by hand so results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() { return engine_(); }

  /// Uniform draw from the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// True with probability `p`; p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return uniform_open() < p; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's nearly-divisionless rejection.
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Independent stream number `index` derived from `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

  /// Stream derived from this generator's seed (does not advance *this).
  Rng fork(std::uint64_t index) const { return substream(seed_, index); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace basket_dae
