#include <cmath>
#include <limits>
#include <stdexcept>

#include "incad/kernels.hpp"

namespace incad::kernels {

double mixture_log_density_at(const Observation& x, std::span<const MixtureComponent> components) {
  // Streaming log-sum-exp: rescale the accumulator whenever the running max moves.
  double best = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (const auto& c : components) {
    const double v = c.log_weight + c.density.log_pdf(x);
    if (v == -std::numeric_limits<double>::infinity()) continue;
    if (v > best) {
      acc = acc * std::exp(best - v) + 1.0;
      best = v;
    } else {
      acc += std::exp(v - best);
    }
  }
  if (!std::isfinite(best)) return best;
  return best + std::log(acc);
}

void mixture_log_density_serial(std::span<const Observation> points,
                                std::span<const MixtureComponent> components,
                                std::span<double> out) {
  if (out.size() != points.size()) throw std::invalid_argument("mixture_log_density: output size mismatch");
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = mixture_log_density_at(points[i], components);
  }
}

}  // namespace incad::kernels
