#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "incad/random.hpp"

namespace incad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A single d-dimensional data point.
using Observation = Vector;

struct MVNParams {
  Vector mean;
  Matrix covariance;
};

// Normal-Inverse-Wishart hyperparameters; the base distribution of the mixture.
struct NIWParams {
  Vector mu0;
  double kappa0 = 1.0;
  double nu0 = 3.0;
  Matrix psi;

  int dim() const noexcept { return static_cast<int>(mu0.size()); }
  // Throws std::invalid_argument on kappa0 <= 0, nu0 <= d - 1, or a non-PD psi.
  void validate() const;
};

// Incremental representation of the points held by one cluster.
struct SufficientStats {
  std::size_t n = 0;
  Vector sum;
  Matrix sum_outer;

  static SufficientStats empty(int dim);
  int dim() const noexcept { return static_cast<int>(sum.size()); }

  void add(const Observation& x);
  // Throws std::logic_error when n == 0. Resets to exact zeros when n reaches 0.
  void remove(const Observation& x);
  Vector mean() const;
};

SufficientStats stats_add(SufficientStats stats, const Observation& x);
SufficientStats stats_remove(SufficientStats stats, const Observation& x);

// Gaussian log-density with a cached Cholesky factor. Construction throws
// NumericalError when the covariance is not positive-definite.
class GaussianDensity {
 public:
  GaussianDensity() = default;
  explicit GaussianDensity(const MVNParams& params);

  double log_pdf(const Observation& x) const;
  int dim() const noexcept { return static_cast<int>(mean_.size()); }

 private:
  Vector mean_;
  Matrix chol_;  // lower-triangular factor of the covariance
  double log_norm_ = 0.0;
};

double mvn_logpdf(const Observation& x, const MVNParams& params);

// Closed-form multivariate Student-t predictive implied by NIW conjugacy,
// with the factorisation cached for repeated evaluation.
class PredictiveDensity {
 public:
  PredictiveDensity() = default;
  explicit PredictiveDensity(const NIWParams& params);

  double log_pdf(const Observation& x) const;
  double dof() const noexcept { return dof_; }

 private:
  Vector loc_;
  Matrix chol_;
  double dof_ = 0.0;
  double log_norm_ = 0.0;
};

double log_predictive(const Observation& x, const NIWParams& params);

NIWParams niw_posterior(const NIWParams& prior, const SufficientStats& stats);

// Covariance ~ IW(nu0, psi) via the Bartlett decomposition, mean ~ N(mu0, cov / kappa0).
MVNParams sample_niw(const NIWParams& params, RandomSource& rng);

// Sample mean and (biased, 1/N) covariance of a point set.
MVNParams sample_moments(std::span<const Observation> points);

}  // namespace incad
