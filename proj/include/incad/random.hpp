#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace incad {

// Seedable deterministic generator. Every stochastic operation in the library
// takes one of these explicitly; split() derives independent child streams.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  // Child stream keyed by `stream`; does not advance this generator.
  RandomSource split(std::uint64_t stream) const;

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform();  // [0, 1)
  double normal();
  double chi_squared(double dof);
  bool bernoulli(double p);
  std::size_t uniform_index(std::size_t n);

  // Draw an index with probability proportional to weights[i] (non-negative).
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finaliser; used for seed derivation.
std::uint64_t mix_seed(std::uint64_t value) noexcept;

}  // namespace incad
