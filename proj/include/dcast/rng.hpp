#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dcast {

/// Deterministic RNG used across the project. All double extraction is done
/// by hand from the raw 64-bit stream so that two runs of the same binary
/// (and the same binary built on another machine) produce identical draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  /// Independent child stream. Derivation depends only on the parent seed
  /// and the salt, never on how many draws the parent has made.
  Rng fork(std::uint64_t salt) const { return Rng(mix(seed_ ^ mix(salt))); }

  std::uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Modulo bias is below 1e-18 for the small n
  /// used here.
  std::uint64_t uniform_int(std::uint64_t n) { return bits() % n; }

  /// Standard normal via Box-Muller; caches the spare deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dcast
