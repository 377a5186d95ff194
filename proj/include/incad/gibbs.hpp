#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "incad/evt.hpp"
#include "incad/model.hpp"
#include "incad/random.hpp"

namespace incad {

// Per-point inputs to the modified CRP: the point's tail probability p, whether
// it sits in the density tail, and its current anomaly flag.
struct PointContext {
  double p = 0.0;
  bool in_tail = false;
  bool flagged = false;
};

// Concentration used for a point: alpha for unflagged points, the tail-aware
// effective alpha for flagged ones.
double point_concentration(const RunConfig& cfg, const PointContext& ctx);

// Density image of the current mixture with its GPD tail fit. The tail
// quantile is widened to max(q, min_tail_points / N) (capped below 0.5) so the
// fit has enough exceedances; when it still cannot be fitted `fit` is empty
// and every point gets p = 0.
struct TailView {
  DensityImage image;
  std::optional<GPDTailFit> fit;

  PointContext context(std::size_t i, bool flagged) const;
};

double effective_tail_quantile(const RunConfig& cfg, std::size_t n);
TailView compute_tail_view(const ModelState& state, std::span<const Observation> data);
DensityImage density_image(const ModelState& state, std::span<const Observation> data, double q);

// Removes x_i from its cluster; deletes the cluster if it empties and compacts ids.
void detach_point(ModelState& state, std::span<const Observation> data, std::size_t i);

// Probability vector of length K + 1 for a detached point. Entry k < K is
// proportional to n_k F(x | theta_k) / (n + alpha' - 1), entry K to
// alpha' * predictive(x) / (n + alpha' - 1), with n the total point count.
std::vector<double> assignment_distribution(const ModelState& state, const Observation& x, const PointContext& ctx);
std::vector<double> assignment_distribution_with(const ModelState& state, const Observation& x, double concentration);

// New cluster with mean x and the configured sigma_new covariance.
std::size_t spawn_cluster(ModelState& state, std::span<const Observation> data, std::size_t i);

// Redraws every cluster's parameters from the NIW posterior of its members.
// Anomalous and normal clusters share the same base distribution.
void resample_cluster_params(ModelState& state, RandomSource& rng);

// P(a = 1 | x) = S1 / (S1 + S0), with S1 the gamma-weighted mixture under
// alpha* and S0 the (1 - gamma)-weighted mixture under alpha.
double anomaly_flag_posterior(const ModelState& state, const Observation& x, const PointContext& ctx);

bool sample_anomaly_flag(double p, RandomSource& rng);

// Flags every member of each cluster whose members are strictly more than
// half flagged. Idempotent.
void cluster_majority_relabel(ModelState& state);

// Detach, reassign, resample and reflag a single point. Relabels clusters
// afterwards only when relabel_per_point is set; otherwise callers relabel
// once every point has been redrawn.
void update_point(ModelState& state,
                  std::span<const Observation> data,
                  std::size_t i,
                  const TailView& tail,
                  RandomSource& rng);

// One full pass over every point. The density image and GPD fit are refreshed
// once per sweep, or before every point when refit_per_point is set. Ends
// with a majority relabel.
void gibbs_sweep(ModelState& state, std::span<const Observation> data, RandomSource& rng);

// Initial state: init_clusters identical clusters (sample mean,
// init_cov_scale * sample covariance) with uniformly random assignments.
ModelState initialize_state(std::shared_ptr<const RunConfig> config,
                            std::span<const Observation> data,
                            RandomSource& rng);

// Runs config.sweeps sweeps; `observe` sees the state after every sweep past burn-in.
using SweepObserver = std::function<void(std::size_t sweep, const ModelState&)>;
void run_gibbs(ModelState& state,
               std::span<const Observation> data,
               RandomSource& rng,
               const SweepObserver& observe = {});

// Flags with the small-cluster rule applied: every cluster of size
// <= frac * N is classified anomalous. Does not modify the state.
std::vector<std::uint8_t> classified_flags(const ModelState& state, double small_cluster_frac);
void finalize_small_clusters(ModelState& state);

// Log of the sequential assignment probability
//   prod_i [ p_i w_i / (I_i + alpha - 1) + (1 - p_i) w*_i / (I_i + alpha*_i - 1) ]
// where I_i is the arrival position, w_i = w*_i = current size for a join, and
// w_i = alpha, w*_i = alpha*_i for a new cluster. `order` lists point indices in
// arrival order; labels, p and alpha_star are indexed by point.
double joint_assignment_log_prob(std::span<const std::size_t> order,
                                 std::span<const int> labels,
                                 std::span<const double> p,
                                 double alpha,
                                 std::span<const double> alpha_star);

}  // namespace incad
