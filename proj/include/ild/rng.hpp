#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ild/types.hpp"

namespace ild {

/// Deterministic generator used by every stochastic operation ("ild-rng v1").
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits; normals use the Box-Muller
/// transform with the sine branch cached for the next call. No standard
/// library distributions are involved.
class Rng {
 public:
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
  std::uint64_t index(std::uint64_t n);

  Vec normal_vector(int n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent sub-seed from a base seed and a list of stream tags.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

}  // namespace ild
