#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace pml {

/// Seeded random source.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// derives every continuous variate locally so draws are bit-reproducible
/// across standard library implementations (std::*_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze/rejection. Shapes below one
  /// use the boost Gamma(shape) = Gamma(shape + 1) * U^(1/shape).
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed for a sub-task (pair, cell, worker) of a run.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ (stream + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based uniform on [0, 1): the value depends only on (seed, counter),
/// so any partition of the counter range reproduces the same draws.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(splitmix64(seed ^ splitmix64(counter)) >> 11) * 0x1.0p-53;
}

}  // namespace pml
