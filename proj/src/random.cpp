#include "incad/random.hpp"

#include <numeric>
#include <stdexcept>

namespace incad {

std::uint64_t mix_seed(std::uint64_t value) noexcept {
  value += 0x9e3779b97f4a7c15ULL;
  value = (value ^ (value >> 30)) * 0xbf58476d1ce4e5b9ULL;
  value = (value ^ (value >> 27)) * 0x94d049bb133111ebULL;
  return value ^ (value >> 31);
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

RandomSource RandomSource::split(std::uint64_t stream) const {
  return RandomSource(mix_seed(seed_ ^ mix_seed(stream + 1)));
}

double RandomSource::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RandomSource::normal() { return normal_(engine_); }

double RandomSource::chi_squared(double dof) {
  return std::gamma_distribution<double>(0.5 * dof, 2.0)(engine_);
}

bool RandomSource::bernoulli(double p) { return uniform() < p; }

std::size_t RandomSource::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::size_t RandomSource::categorical(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("categorical: no weights");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u just above the running sum; take the last positive entry.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace incad
