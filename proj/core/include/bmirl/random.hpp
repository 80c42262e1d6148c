#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bmirl {

/// Mixes two 64-bit words (splitmix64 finalizer applied twice).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/**
 * Per-stream generator. A stream is identified by (seed, stream index), so
 * trajectory i of a batch always sees the same numbers regardless of how
 * many other trajectories were drawn before it.
 *
 * Uniforms and categorical draws are produced by hand rather than through
 * <random> distributions, whose output is implementation-defined.
 */
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix_seed(seed, stream)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int index(int n);

  /// Inverse-CDF draw from a probability vector (row or column). Entries
  /// with zero probability are never returned.
  template <class Derived>
  int categorical(const Eigen::DenseBase<Derived>& probs) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) total += probs(i);
    const double u = uniform() * total;
    double acc = 0.0;
    int last_positive = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      if (probs(i) > 0.0) {
        acc += probs(i);
        last_positive = static_cast<int>(i);
        if (u < acc) return last_positive;
      }
    }
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bmirl
