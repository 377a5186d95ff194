#pragma once

#include <span>

#include "incad/mvn.hpp"

namespace incad::kernels {

struct MixtureComponent {
  double log_weight = 0.0;
  GaussianDensity density;
};

// out[i] = log sum_k exp(log_weight_k + log N(points[i]; component k)).
// The serial routine is the reference; the OpenMP routine must agree with it
// bit for bit since both evaluate each point with the same scalar code.
void mixture_log_density_serial(std::span<const Observation> points,
                                std::span<const MixtureComponent> components,
                                std::span<double> out);

void mixture_log_density_openmp(std::span<const Observation> points,
                                std::span<const MixtureComponent> components,
                                std::span<double> out);

// Single-point log-sum-exp shared by both kernels.
double mixture_log_density_at(const Observation& x, std::span<const MixtureComponent> components);

int openmp_max_threads();

}  // namespace incad::kernels
