#include <omp.h>

#include <cstdint>
#include <stdexcept>

#include "incad/kernels.hpp"

namespace incad::kernels {

void mixture_log_density_openmp(std::span<const Observation> points,
                                std::span<const MixtureComponent> components,
                                std::span<double> out) {
  if (out.size() != points.size()) throw std::invalid_argument("mixture_log_density: output size mismatch");
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = mixture_log_density_at(points[i], components);
  }
}

int openmp_max_threads() { return omp_get_max_threads(); }

}  // namespace incad::kernels
