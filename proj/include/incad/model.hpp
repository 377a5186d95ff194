#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "incad/evt.hpp"
#include "incad/kernels.hpp"
#include "incad/mvn.hpp"

namespace incad {

// Fully resolved hyperparameters for one run. Matrices that depend on the data
// (sigma_new, niw.psi) are filled in by resolve_run_config().
struct RunConfig {
  double alpha = 1.0;
  double gamma = 0.05;
  double ev_prop = std::exp(-0.5);
  double q = 0.05;
  double ev_alpha_scale = 100.0;
  std::size_t min_tail_points = kDefaultMinTailPoints;
  double small_cluster_frac = 0.05;
  Matrix sigma_new;
  NIWParams niw;
  std::size_t sweeps = 100;
  std::size_t burn_in = 50;
  std::uint64_t seed = 42;
  bool refit_per_point = false;
  bool relabel_per_point = false;
  std::size_t init_clusters = 10;
  double init_cov_scale = 1.0;
  bool parallel_density = true;

  TailConfig tail() const;
  int dim() const noexcept { return niw.dim(); }
  // Throws ConfigError on any range violation.
  void validate() const;
};

struct ClusterRecord {
  MVNParams params;
  SufficientStats stats;
  std::size_t flagged = 0;  // members with a = 1
  GaussianDensity density;  // cached factorisation of params

  std::size_t size() const noexcept { return stats.n; }
  // Cluster-level label: strictly more than half of the members are flagged.
  bool anomalous() const noexcept { return 2 * flagged > stats.n; }
  void set_params(MVNParams p);
};

// Cluster assignments z, anomaly flags a, per-point tail probabilities p and
// the live clusters. Ids are contiguous 0..K-1 and no cluster is empty.
// A point may be transiently detached (z = kDetached) inside a Gibbs step.
class ModelState {
 public:
  static constexpr int kDetached = -1;

  ModelState(std::shared_ptr<const RunConfig> config, std::size_t n_points);

  const RunConfig& config() const noexcept { return *config_; }
  std::shared_ptr<const RunConfig> config_ptr() const noexcept { return config_; }
  void set_config(std::shared_ptr<const RunConfig> config);
  const PredictiveDensity& prior_predictive() const noexcept { return prior_predictive_; }

  std::size_t num_points() const noexcept { return z_.size(); }
  std::size_t num_clusters() const noexcept { return clusters_.size(); }
  int dim() const noexcept { return config_->dim(); }

  int assignment(std::size_t i) const { return z_[i]; }
  bool flag(std::size_t i) const { return a_[i] != 0; }
  double tail_probability(std::size_t i) const { return p_[i]; }
  const std::vector<int>& assignments() const noexcept { return z_; }
  const std::vector<std::uint8_t>& flags() const noexcept { return a_; }
  const std::vector<double>& tail_probabilities() const noexcept { return p_; }
  const ClusterRecord& cluster(std::size_t k) const { return clusters_[k]; }
  const std::vector<ClusterRecord>& clusters() const noexcept { return clusters_; }

  // Grows the point arrays by one detached, unflagged point.
  void append_point();
  void attach(std::size_t i, std::size_t k, const Observation& x);
  // Returns true when the cluster emptied and was removed (ids above it shift down).
  bool detach(std::size_t i, const Observation& x);
  // New cluster holding only point i; returns its id.
  std::size_t spawn(std::size_t i, const Observation& x, MVNParams params);
  void set_flag(std::size_t i, bool flagged);
  void set_tail_probability(std::size_t i, double p) { p_[i] = p; }
  void set_cluster_params(std::size_t k, MVNParams params);
  // Flags every member of cluster k.
  void flag_cluster(std::size_t k);

  // Mixture weights n_k / N over attached points, paired with cached densities.
  std::vector<kernels::MixtureComponent> mixture() const;

  // Throws std::logic_error describing the first violated invariant.
  void check_invariants(std::span<const Observation> data, bool require_attached = true) const;

  // Restores a state from serialized parts; call check_invariants() afterwards.
  static ModelState from_parts(std::shared_ptr<const RunConfig> config,
                               std::vector<int> z,
                               std::vector<std::uint8_t> a,
                               std::vector<double> p,
                               std::vector<ClusterRecord> clusters);

 private:
  std::shared_ptr<const RunConfig> config_;
  PredictiveDensity prior_predictive_;
  std::vector<int> z_;
  std::vector<std::uint8_t> a_;
  std::vector<double> p_;
  std::vector<ClusterRecord> clusters_;
};

// Settings-independent defaults for the data-derived matrices:
// sigma_new = sigma_scale * cov, NIW(mu0 = mean, kappa0, nu0 = d + nu0_offset,
// psi = psi_scale * cov). The covariance is floored to stay positive-definite.
struct PriorScales {
  double sigma_new_scale = 0.1;
  double kappa0 = 0.01;
  double nu0_offset = 2.0;
  double psi_scale = 0.4;
};
Matrix floored_covariance(const Matrix& cov);
void fill_data_dependent(RunConfig& cfg, std::span<const Observation> data, const PriorScales& scales);

}  // namespace incad
