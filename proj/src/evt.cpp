#include "incad/evt.hpp"

#include <boost/math/tools/minima.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "incad/errors.hpp"

namespace incad {

std::size_t DensityImage::tail_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return v < threshold_t1; }));
}

std::vector<std::size_t> DensityImage::tail_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < threshold_t1) out.push_back(i);
  }
  return out;
}

std::size_t tail_order_index(std::size_t n, double q) {
  if (n == 0) return 0;
  const double raw = std::ceil(q * static_cast<double>(n) - 1e-9);
  const auto m = static_cast<std::size_t>(std::max(0.0, raw));
  return std::min(m, n - 1);
}

DensityImage density_image(std::span<const Observation> data,
                           std::span<const kernels::MixtureComponent> mixture,
                           double q,
                           bool parallel) {
  if (data.empty()) throw DataError("density_image: no data");
  if (mixture.empty()) throw std::invalid_argument("density_image: mixture has no components");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("density_image: q must lie in (0, 1)");

  DensityImage image;
  image.quantile = q;
  image.values.resize(data.size());
  if (parallel) {
    kernels::mixture_log_density_openmp(data, mixture, image.values);
  } else {
    kernels::mixture_log_density_serial(data, mixture, image.values);
  }
  for (double v : image.values) {
    if (!std::isfinite(v)) throw NumericalError("density_image: non-finite mixture log-density");
  }

  std::vector<double> sorted = image.values;
  const std::size_t m = tail_order_index(sorted.size(), q);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end());
  image.threshold_t1 = sorted[m];
  return image;
}

double GPDTailFit::cdf(double y) const {
  const double z = (y - nu) / beta;
  if (!(z > 0.0)) return 0.0;
  if (std::abs(xi) < 1e-12) return -std::expm1(-z);
  const double t = xi * z;
  if (t <= -1.0) return 1.0;  // beyond the upper end point of a bounded tail
  return -std::expm1(-std::log1p(t) / xi);
}

namespace {

struct Profile {
  std::span<const double> y;  // exceedances scaled to unit mean
  double y_max = 0.0;

  double shape(double theta) const {
    double acc = 0.0;
    for (double v : y) acc += std::log1p(theta * v);
    return acc / static_cast<double>(y.size());
  }

  // Profile log-likelihood with the shape in closed form for fixed theta.
  double loglik(double theta) const {
    const double n = static_cast<double>(y.size());
    if (std::abs(theta) * y_max < 1e-10) return -n;  // exponential limit, unit mean
    const double xi = shape(theta);
    const double ratio = xi / theta;
    if (!(ratio > 0.0) || !std::isfinite(xi)) return -std::numeric_limits<double>::infinity();
    return -n * std::log(ratio) - n * xi - n;
  }

  // theta at which the closed-form shape equals `target`; shape is increasing in theta.
  double theta_for_shape(double target) const {
    double lo = -(1.0 - 1e-12) / y_max;
    double hi = 1.0;
    if (shape(lo) >= target) return lo;
    while (shape(hi) < target) {
      hi *= 2.0;
      if (hi > 1e15) return hi;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (shape(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

GPDTailFit method_of_moments(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= std::max(1.0, n - 1.0);

  GPDTailFit fit;
  fit.method = FitMethod::kMethodOfMoments;
  fit.n_exceedances = y.size();
  fit.xi = var > 0.0 ? 0.5 * (1.0 - mean * mean / var) : kMinShape;
  fit.xi = std::clamp(fit.xi, kMinShape, std::min(kMaxShape, 0.49));
  // GPD mean is beta / (1 - xi).
  fit.beta = mean * (1.0 - fit.xi);
  if (!(fit.beta > 0.0)) fit.beta = std::max(mean, std::numeric_limits<double>::min());
  return fit;
}

}  // namespace

GPDTailFit fit_gpd(std::span<const double> exceedances, std::size_t min_points) {
  if (exceedances.size() < min_points || exceedances.empty()) {
    throw InsufficientTailError(exceedances.size(), std::max<std::size_t>(min_points, 1));
  }
  for (double v : exceedances) {
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericalError("fit_gpd: exceedances must be positive and finite");
  }

  const double n = static_cast<double>(exceedances.size());
  const double mean = std::accumulate(exceedances.begin(), exceedances.end(), 0.0) / n;
  std::vector<double> scaled(exceedances.begin(), exceedances.end());
  for (double& v : scaled) v /= mean;
  const auto [mn, mx] = std::minmax_element(scaled.begin(), scaled.end());
  if (*mx - *mn <= 1e-12 * *mx) {
    spdlog::debug("fit_gpd: degenerate exceedances, using method of moments");
    return method_of_moments(exceedances);
  }

  Profile profile{scaled, *mx};
  const double theta_lo = profile.theta_for_shape(kMinShape);
  const double theta_hi = profile.theta_for_shape(kMaxShape);

  // Coarse scan in shape space, then Brent on theta inside the best bracket.
  constexpr int kGrid = 96;
  std::vector<double> thetas(kGrid + 1);
  std::vector<double> values(kGrid + 1);
  for (int j = 0; j <= kGrid; ++j) {
    const double target = kMinShape + (kMaxShape - kMinShape) * j / kGrid;
    thetas[j] = j == 0 ? theta_lo : (j == kGrid ? theta_hi : profile.theta_for_shape(target));
    values[j] = profile.loglik(thetas[j]);
  }
  const auto best = static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
  if (!std::isfinite(values[best])) {
    spdlog::debug("fit_gpd: profile likelihood not finite, using method of moments");
    return method_of_moments(exceedances);
  }

  double theta = thetas[best];
  const double a = thetas[std::max(0, best - 1)];
  const double b = thetas[std::min(kGrid, best + 1)];
  if (b > a) {
    std::uintmax_t max_iter = 200;
    const auto r = boost::math::tools::brent_find_minima(
        [&](double t) { return -profile.loglik(t); }, a, b, std::numeric_limits<double>::digits / 2, max_iter);
    if (std::isfinite(r.second) && -r.second >= values[best]) theta = r.first;
  }

  GPDTailFit fit;
  fit.method = FitMethod::kMaximumLikelihood;
  fit.n_exceedances = exceedances.size();
  if (std::abs(theta) * profile.y_max < 1e-10) {
    fit.xi = 0.0;
    fit.beta = mean;
  } else {
    fit.xi = std::clamp(profile.shape(theta), kMinShape, kMaxShape);
    fit.beta = fit.xi / theta * mean;
  }
  if (!(fit.beta > 0.0) || !std::isfinite(fit.beta) || !std::isfinite(fit.xi)) {
    spdlog::debug("fit_gpd: invalid MLE, using method of moments");
    return method_of_moments(exceedances);
  }
  return fit;
}

GPDTailFit fit_gpd_lower_tail(const DensityImage& image, std::size_t min_points) {
  const double t1 = std::exp(image.threshold_t1);
  std::vector<double> exceedances;
  for (double v : image.values) {
    if (v < image.threshold_t1) exceedances.push_back(-t1 * std::expm1(v - image.threshold_t1));
  }
  if (exceedances.size() < min_points) throw InsufficientTailError(exceedances.size(), min_points);
  if (!(t1 > 0.0)) throw NumericalError("fit_gpd_lower_tail: threshold density underflows");
  return fit_gpd(exceedances, min_points);
}

double anomaly_probability(double log_fx, const DensityImage& image, const GPDTailFit& fit) {
  if (!(log_fx < image.threshold_t1)) return 0.0;
  const double exceedance = -std::exp(image.threshold_t1) * std::expm1(log_fx - image.threshold_t1);
  return std::clamp(fit.cdf(exceedance), 0.0, kMaxAnomalyProbability);
}

void TailConfig::validate() const {
  if (!(q > 0.0 && q < 0.5)) throw ConfigError("tail.q must lie in (0, 0.5)");
  if (!(ev_prop >= 0.0 && ev_prop <= 1.0)) throw ConfigError("tail.ev_prop must lie in [0, 1]");
  if (!(alpha_base > 0.0)) throw ConfigError("model.alpha must be positive");
  if (!(ev_alpha_scale > 0.0)) throw ConfigError("tail.ev_alpha_scale must be positive");
  if (min_tail_points < 2) throw ConfigError("tail.min_points must be at least 2");
}

double effective_alpha(double p, const TailConfig& cfg, bool in_tail) {
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("effective_alpha: p must lie in [0, 1)");
  if (!in_tail) return cfg.alpha_base;
  return cfg.alpha_base * (1.0 - cfg.ev_prop) + cfg.ev_alpha_scale / (1.0 - p) * cfg.ev_prop;
}

}  // namespace incad
