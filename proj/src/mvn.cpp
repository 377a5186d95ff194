#include "incad/mvn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "incad/errors.hpp"

namespace incad {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Matrix cholesky_or_throw(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": matrix is not positive-definite");
  }
  return llt.matrixL();
}

double log_det_from_chol(const Matrix& chol) {
  return 2.0 * chol.diagonal().array().log().sum();
}

// Mahalanobis term (x - m)' (L L')^{-1} (x - m).
double mahalanobis(const Matrix& chol, const Vector& delta) {
  const Vector y = chol.triangularView<Eigen::Lower>().solve(delta);
  return y.squaredNorm();
}

}  // namespace

void NIWParams::validate() const {
  const int d = dim();
  if (d < 1) throw std::invalid_argument("NIW: dimension must be >= 1");
  if (!(kappa0 > 0.0)) throw std::invalid_argument("NIW: kappa0 must be positive");
  if (!(nu0 > d - 1)) throw std::invalid_argument("NIW: nu0 must exceed d - 1");
  if (psi.rows() != d || psi.cols() != d) throw std::invalid_argument("NIW: psi has wrong shape");
  Eigen::LLT<Matrix> llt(psi);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("NIW: psi is not positive-definite");
}

SufficientStats SufficientStats::empty(int dim) {
  SufficientStats s;
  s.sum = Vector::Zero(dim);
  s.sum_outer = Matrix::Zero(dim, dim);
  return s;
}

void SufficientStats::add(const Observation& x) {
  ++n;
  sum += x;
  sum_outer.noalias() += x * x.transpose();
}

void SufficientStats::remove(const Observation& x) {
  if (n == 0) throw std::logic_error("SufficientStats::remove on empty stats");
  --n;
  if (n == 0) {
    sum.setZero();
    sum_outer.setZero();
    return;
  }
  sum -= x;
  sum_outer.noalias() -= x * x.transpose();
}

Vector SufficientStats::mean() const {
  if (n == 0) return Vector::Zero(dim());
  return sum / static_cast<double>(n);
}

SufficientStats stats_add(SufficientStats stats, const Observation& x) {
  stats.add(x);
  return stats;
}

SufficientStats stats_remove(SufficientStats stats, const Observation& x) {
  stats.remove(x);
  return stats;
}

GaussianDensity::GaussianDensity(const MVNParams& params)
    : mean_(params.mean), chol_(cholesky_or_throw(params.covariance, "Gaussian covariance")) {
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * kLog2Pi + log_det_from_chol(chol_));
}

double GaussianDensity::log_pdf(const Observation& x) const {
  return log_norm_ - 0.5 * mahalanobis(chol_, x - mean_);
}

double mvn_logpdf(const Observation& x, const MVNParams& params) {
  if (x.size() != params.mean.size()) throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  return GaussianDensity(params).log_pdf(x);
}

PredictiveDensity::PredictiveDensity(const NIWParams& params) {
  params.validate();
  const double d = params.dim();
  dof_ = params.nu0 - d + 1.0;
  loc_ = params.mu0;
  const Matrix scale = params.psi * ((params.kappa0 + 1.0) / (params.kappa0 * dof_));
  chol_ = cholesky_or_throw(scale, "Student-t scale");
  log_norm_ = std::lgamma(0.5 * (dof_ + d)) - std::lgamma(0.5 * dof_) -
              0.5 * d * std::log(dof_ * std::numbers::pi) - 0.5 * log_det_from_chol(chol_);
}

double PredictiveDensity::log_pdf(const Observation& x) const {
  const double d = static_cast<double>(loc_.size());
  return log_norm_ - 0.5 * (dof_ + d) * std::log1p(mahalanobis(chol_, x - loc_) / dof_);
}

double log_predictive(const Observation& x, const NIWParams& params) {
  return PredictiveDensity(params).log_pdf(x);
}

NIWParams niw_posterior(const NIWParams& prior, const SufficientStats& stats) {
  if (stats.n == 0) return prior;
  const double n = static_cast<double>(stats.n);
  const Vector xbar = stats.sum / n;
  const Matrix scatter = stats.sum_outer - n * xbar * xbar.transpose();
  const Vector diff = xbar - prior.mu0;

  NIWParams post;
  post.kappa0 = prior.kappa0 + n;
  post.nu0 = prior.nu0 + n;
  post.mu0 = (prior.kappa0 * prior.mu0 + stats.sum) / post.kappa0;
  post.psi = prior.psi + scatter + (prior.kappa0 * n / post.kappa0) * diff * diff.transpose();
  post.psi = 0.5 * (post.psi + post.psi.transpose());
  return post;
}

MVNParams sample_niw(const NIWParams& params, RandomSource& rng) {
  const int d = params.dim();
  const Matrix psi_chol = cholesky_or_throw(params.psi, "NIW psi");

  // Bartlett factor of a Wishart(nu, psi^{-1}) draw; the inverse-Wishart
  // sample is (U A^{-T})(U A^{-T})' with psi = U U'.
  Matrix bartlett = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(params.nu0 - i));
    for (int j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const Matrix inv_t = bartlett.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
  const Matrix factor = psi_chol * inv_t;

  MVNParams out;
  out.covariance = factor * factor.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());

  Vector noise(d);
  for (int i = 0; i < d; ++i) noise(i) = rng.normal();
  out.mean = params.mu0 + factor * noise / std::sqrt(params.kappa0);
  return out;
}

MVNParams sample_moments(std::span<const Observation> points) {
  if (points.empty()) throw std::invalid_argument("sample_moments: no points");
  const auto d = points.front().size();
  SufficientStats s = SufficientStats::empty(static_cast<int>(d));
  for (const auto& x : points) s.add(x);
  MVNParams m;
  m.mean = s.mean();
  const double n = static_cast<double>(s.n);
  m.covariance = s.sum_outer / n - m.mean * m.mean.transpose();
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
  return m;
}

}  // namespace incad
