#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "incad/kernels.hpp"
#include "incad/mvn.hpp"

namespace incad {

// Image of the mixture pdf over the data, Y = f(X), kept in log space.
struct DensityImage {
  std::vector<double> values;  // log f(x_i)
  double threshold_t1 = 0.0;   // log of the tail-quantile density value
  double quantile = 0.0;       // tail quantile the threshold was taken at

  // Tail membership is strict: f(x) == t1 is not in the tail.
  bool in_tail(std::size_t i) const { return values[i] < threshold_t1; }
  std::size_t tail_count() const;
  std::vector<std::size_t> tail_indices() const;
};

// Index of the order statistic used as the tail threshold for n points at
// quantile q: ceil(q * n) points lie strictly below it (absent ties).
std::size_t tail_order_index(std::size_t n, double q);

// Builds the image from precomputed component weights and densities. The q-th
// percentile threshold counts ties toward the tail side of the cut.
DensityImage density_image(std::span<const Observation> data,
                           std::span<const kernels::MixtureComponent> mixture,
                           double q,
                           bool parallel = true);

enum class FitMethod { kMaximumLikelihood, kMethodOfMoments };

struct GPDTailFit {
  double nu = 0.0;    // location, density units
  double beta = 1.0;  // scale
  double xi = 0.0;    // shape
  FitMethod method = FitMethod::kMaximumLikelihood;
  std::size_t n_exceedances = 0;

  // 1 - (1 + xi (y - nu) / beta)^(-1/xi); exponential form at xi == 0.
  double cdf(double y) const;
};

inline constexpr double kMinShape = -0.9;
inline constexpr double kMaxShape = 5.0;
inline constexpr std::size_t kDefaultMinTailPoints = 20;

// Maximum-likelihood GPD fit on positive exceedances (Grimshaw reduction:
// profile over theta = xi / beta with xi in closed form, xi kept inside
// [kMinShape, kMaxShape]). Falls back to the method of moments when the
// sample is degenerate or the likelihood cannot be maximised.
GPDTailFit fit_gpd(std::span<const double> exceedances, std::size_t min_points = kDefaultMinTailPoints);

// Fits the exceedances t1 - f(x) of the points strictly below the threshold,
// in density units. Throws InsufficientTailError when too few points qualify.
GPDTailFit fit_gpd_lower_tail(const DensityImage& image, std::size_t min_points = kDefaultMinTailPoints);

inline constexpr double kMaxAnomalyProbability = 1.0 - 1e-9;

// 0 when log_fx >= t1, else the GPD tail probability of the exceedance,
// clamped to [0, kMaxAnomalyProbability].
double anomaly_probability(double log_fx, const DensityImage& image, const GPDTailFit& fit);

struct TailConfig {
  double q = 0.05;
  double ev_prop = std::exp(-0.5);
  double alpha_base = 1.0;
  double ev_alpha_scale = 100.0;
  std::size_t min_tail_points = kDefaultMinTailPoints;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// alpha_base outside the tail; inside it the blend
//   alpha_base * (1 - ev_prop) + ev_alpha_scale / (1 - p) * ev_prop.
// Throws std::domain_error unless 0 <= p < 1.
double effective_alpha(double p, const TailConfig& cfg, bool in_tail);

}  // namespace incad
