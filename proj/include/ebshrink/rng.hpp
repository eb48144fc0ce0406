#pragma once

#include "ebshrink/spectral.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ebshrink {

/// SplitMix64 finalizer; the seed-splitting primitive.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of child stream `index` under `base`: splitmix64(base + golden * (index + 1)).
/// Replication r of any experiment runs on derive_seed(seed, r).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// The single generator type used by every stochastic routine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1); consumes exactly one engine draw.
  double uniform();
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
  /// Fisher-Yates shuffle of 0..n-1 driven by uniform().
  std::vector<Eigen::Index> permutation(Eigen::Index n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ebshrink
