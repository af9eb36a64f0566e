#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mvi {

/// Seeded random source with platform-independent derived draws. The
/// standard distributions are implementation-defined, so the few draws the
/// library needs are computed directly from the engine's raw bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int index(int n) { return static_cast<int>(uniform() * n); }

  /// Standard exponential; normalized draws give a flat Dirichlet sample.
  double exponential() { return -std::log1p(-uniform()); }

  /// Rademacher sign.
  int sign() { return (engine_() >> 63) ? 1 : -1; }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent child seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mvi
