#include "incad/gibbs.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "incad/errors.hpp"

namespace incad {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// log sum_k n_k F(x | theta_k)
double log_cluster_mass(const ModelState& state, const Observation& x) {
  std::vector<double> terms;
  terms.reserve(state.num_clusters());
  for (const auto& c : state.clusters()) {
    terms.push_back(std::log(static_cast<double>(c.size())) + c.density.log_pdf(x));
  }
  return terms.empty() ? kNegInf : log_sum_exp(terms);
}

double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

double point_concentration(const RunConfig& cfg, const PointContext& ctx) {
  if (!ctx.flagged) return cfg.alpha;
  return effective_alpha(std::min(ctx.p, kMaxAnomalyProbability), cfg.tail(), ctx.in_tail);
}

PointContext TailView::context(std::size_t i, bool flagged) const {
  PointContext ctx;
  ctx.flagged = flagged;
  ctx.in_tail = fit.has_value() && image.in_tail(i);
  ctx.p = ctx.in_tail ? anomaly_probability(image.values[i], image, *fit) : 0.0;
  return ctx;
}

double effective_tail_quantile(const RunConfig& cfg, std::size_t n) {
  if (n == 0) return cfg.q;
  const double needed = static_cast<double>(cfg.min_tail_points) / static_cast<double>(n);
  return std::min(std::max(cfg.q, needed), 0.49);
}

DensityImage density_image(const ModelState& state, std::span<const Observation> data, double q) {
  if (state.num_clusters() == 0) throw std::invalid_argument("density_image: state has no clusters");
  const auto mixture = state.mixture();
  return density_image(data, mixture, q, state.config().parallel_density);
}

TailView compute_tail_view(const ModelState& state, std::span<const Observation> data) {
  const RunConfig& cfg = state.config();
  TailView view;
  view.image = density_image(state, data, effective_tail_quantile(cfg, data.size()));
  try {
    view.fit = fit_gpd_lower_tail(view.image, cfg.min_tail_points);
  } catch (const InsufficientTailError& e) {
    spdlog::debug("tail fit deferred: {}", e.what());
  } catch (const NumericalError& e) {
    spdlog::warn("tail fit deferred: {}", e.what());
  }
  return view;
}

void detach_point(ModelState& state, std::span<const Observation> data, std::size_t i) {
  state.detach(i, data[i]);
}

std::vector<double> assignment_distribution_with(const ModelState& state, const Observation& x, double concentration) {
  if (!(concentration >= 0.0)) throw std::invalid_argument("assignment_distribution: negative concentration");
  const std::size_t K = state.num_clusters();
  const double n = static_cast<double>(state.num_points());
  const double log_denom = std::log(n + concentration - 1.0);

  std::vector<double> logw(K + 1);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = state.cluster(k);
    logw[k] = std::log(static_cast<double>(c.size())) + c.density.log_pdf(x) - log_denom;
  }
  logw[K] = (concentration > 0.0 ? std::log(concentration) : kNegInf) + state.prior_predictive().log_pdf(x) - log_denom;

  const double norm = log_sum_exp(logw);
  if (!std::isfinite(norm)) throw NumericalError("assignment_distribution: all weights vanish");
  for (double& v : logw) v = std::exp(v - norm);
  return logw;
}

std::vector<double> assignment_distribution(const ModelState& state, const Observation& x, const PointContext& ctx) {
  return assignment_distribution_with(state, x, point_concentration(state.config(), ctx));
}

std::size_t spawn_cluster(ModelState& state, std::span<const Observation> data, std::size_t i) {
  return state.spawn(i, data[i], MVNParams{data[i], state.config().sigma_new});
}

void resample_cluster_params(ModelState& state, RandomSource& rng) {
  const NIWParams& prior = state.config().niw;
  for (std::size_t k = 0; k < state.num_clusters(); ++k) {
    state.set_cluster_params(k, sample_niw(niw_posterior(prior, state.cluster(k).stats), rng));
  }
}

double anomaly_flag_posterior(const ModelState& state, const Observation& x, const PointContext& ctx) {
  const RunConfig& cfg = state.config();
  if (cfg.gamma <= 0.0) return 0.0;
  if (cfg.gamma >= 1.0) return 1.0;

  const double alpha = cfg.alpha;
  const double alpha_star = effective_alpha(std::min(ctx.p, kMaxAnomalyProbability), cfg.tail(), ctx.in_tail);
  const double n = static_cast<double>(state.num_points());
  const double mass = log_cluster_mass(state, x);
  const double pred = state.prior_predictive().log_pdf(x);

  auto branch = [&](double weight, double conc) {
    const double log_denom = std::log(n + conc - 1.0);
    const double terms[2] = {mass - log_denom, std::log(conc) + pred - log_denom};
    return std::log(weight) + log_sum_exp(terms);
  };
  const double s1 = branch(cfg.gamma, alpha_star);
  const double s0 = branch(1.0 - cfg.gamma, alpha);
  return 1.0 / (1.0 + std::exp(s0 - s1));
}

bool sample_anomaly_flag(double p, RandomSource& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("sample_anomaly_flag: p must lie in [0, 1]");
  return rng.bernoulli(p);
}

void cluster_majority_relabel(ModelState& state) {
  for (std::size_t k = 0; k < state.num_clusters(); ++k) {
    const auto& c = state.cluster(k);
    if (c.anomalous() && c.flagged < c.size()) state.flag_cluster(k);
  }
}

void update_point(ModelState& state,
                  std::span<const Observation> data,
                  std::size_t i,
                  const TailView& tail,
                  RandomSource& rng) {
  const PointContext ctx = tail.context(i, state.flag(i));
  state.set_tail_probability(i, ctx.p);

  detach_point(state, data, i);
  const auto probs = assignment_distribution(state, data[i], ctx);
  const std::size_t k = rng.categorical(probs);
  if (k == state.num_clusters()) {
    spawn_cluster(state, data, i);
  } else {
    state.attach(i, k, data[i]);
  }
  resample_cluster_params(state, rng);
  state.set_flag(i, sample_anomaly_flag(ctx.p, rng));
  if (state.config().relabel_per_point) cluster_majority_relabel(state);
}

void gibbs_sweep(ModelState& state, std::span<const Observation> data, RandomSource& rng) {
  if (data.size() != state.num_points()) throw std::invalid_argument("gibbs_sweep: data/state size mismatch");
  const bool per_point = state.config().refit_per_point;
  TailView tail = compute_tail_view(state, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (per_point && i > 0) tail = compute_tail_view(state, data);
    update_point(state, data, i, tail, rng);
  }
  cluster_majority_relabel(state);
}

ModelState initialize_state(std::shared_ptr<const RunConfig> config,
                            std::span<const Observation> data,
                            RandomSource& rng) {
  if (data.empty()) throw DataError("initialize_state: no data");
  ModelState state(config, data.size());
  const MVNParams moments = sample_moments(data);
  const MVNParams init{moments.mean, config->init_cov_scale * floored_covariance(moments.covariance)};

  const std::size_t k0 = std::min(config->init_clusters, data.size());
  std::vector<int> slot_to_cluster(k0, ModelState::kDetached);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t slot = rng.uniform_index(k0);
    if (slot_to_cluster[slot] == ModelState::kDetached) {
      slot_to_cluster[slot] = static_cast<int>(state.spawn(i, data[i], init));
    } else {
      state.attach(i, static_cast<std::size_t>(slot_to_cluster[slot]), data[i]);
    }
  }
  return state;
}

void run_gibbs(ModelState& state, std::span<const Observation> data, RandomSource& rng, const SweepObserver& observe) {
  const RunConfig& cfg = state.config();
  for (std::size_t s = 0; s < cfg.sweeps; ++s) {
    gibbs_sweep(state, data, rng);
    if (observe && s >= cfg.burn_in) observe(s, state);
  }
}

std::vector<std::uint8_t> classified_flags(const ModelState& state, double small_cluster_frac) {
  std::vector<std::uint8_t> flags = state.flags();
  const double limit = small_cluster_frac * static_cast<double>(state.num_points()) + 1e-9;
  std::vector<bool> small(state.num_clusters());
  for (std::size_t k = 0; k < state.num_clusters(); ++k) {
    small[k] = static_cast<double>(state.cluster(k).size()) <= limit;
  }
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const int k = state.assignment(i);
    if (k != ModelState::kDetached && small[static_cast<std::size_t>(k)]) flags[i] = 1;
  }
  return flags;
}

void finalize_small_clusters(ModelState& state) {
  const double limit = state.config().small_cluster_frac * static_cast<double>(state.num_points()) + 1e-9;
  for (std::size_t k = 0; k < state.num_clusters(); ++k) {
    if (static_cast<double>(state.cluster(k).size()) <= limit) state.flag_cluster(k);
  }
}

double joint_assignment_log_prob(std::span<const std::size_t> order,
                                 std::span<const int> labels,
                                 std::span<const double> p,
                                 double alpha,
                                 std::span<const double> alpha_star) {
  if (labels.size() != p.size() || labels.size() != alpha_star.size()) {
    throw std::invalid_argument("joint_assignment_log_prob: per-point sequences differ in length");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("joint_assignment_log_prob: alpha must be positive");

  // Factorised terms go into separate numerator/denominator lists and are summed
  // in sorted order, so equal multisets give bit-identical totals.
  std::vector<double> numer;
  std::vector<double> denom;
  std::vector<double> mixed;
  std::map<int, std::size_t> sizes;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t idx = order[pos];
    if (idx >= labels.size()) throw std::out_of_range("joint_assignment_log_prob: bad index in order");
    const double pi = p[idx];
    const double as = alpha_star[idx];
    if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("joint_assignment_log_prob: p outside [0,1]");
    if (!(as > 0.0)) throw std::invalid_argument("joint_assignment_log_prob: alpha* must be positive");

    const double position = static_cast<double>(pos + 1);
    const std::size_t size = sizes[labels[idx]];
    const double w_alpha = size == 0 ? alpha : static_cast<double>(size);
    const double w_star = size == 0 ? as : static_cast<double>(size);
    const double d_alpha = position + alpha - 1.0;
    const double d_star = position + as - 1.0;

    if (pi == 0.0) {
      numer.push_back(std::log(w_star));
      denom.push_back(std::log(d_star));
    } else if (pi == 1.0 || as == alpha) {
      numer.push_back(std::log(w_alpha));
      denom.push_back(std::log(d_alpha));
    } else {
      mixed.push_back(std::log(pi * w_alpha / d_alpha + (1.0 - pi) * w_star / d_star));
    }
    ++sizes[labels[idx]];
  }
  return sorted_sum(numer) - sorted_sum(denom) + sorted_sum(mixed);
}

}  // namespace incad
