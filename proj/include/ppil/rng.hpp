#pragma once

#include "ppil/common.hpp"

#include <cstdint>
#include <random>

namespace ppil {

/// Seeded generator with platform-independent draws. The std distributions
/// are implementation-defined, so uniforms are built from raw engine bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index drawn from an (unnormalized) nonnegative weight vector.
  template <class Derived>
  int categorical(const Eigen::DenseBase<Derived>& weights) {
    const double total = weights.sum();
    const double u = uniform() * total;
    double acc = 0.0;
    const int n = static_cast<int>(weights.size());
    int last_positive = 0;
    for (int i = 0; i < n; ++i) {
      const double wi = weights(i);
      if (wi <= 0.0) continue;
      last_positive = i;
      acc += wi;
      if (u < acc) return i;
    }
    return last_positive;
  }

  /// Number of continuations before stopping; P(T = t) = (1 - q) q^t.
  int geometric(double q) {
    int t = 0;
    while (q > 0.0 && uniform() < q) ++t;
    return t;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ppil
