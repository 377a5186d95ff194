#include "incad/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "incad/errors.hpp"

namespace incad {

TailConfig RunConfig::tail() const {
  TailConfig t;
  t.q = q;
  t.ev_prop = ev_prop;
  t.alpha_base = alpha;
  t.ev_alpha_scale = ev_alpha_scale;
  t.min_tail_points = min_tail_points;
  return t;
}

void RunConfig::validate() const {
  tail().validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gibbs.gamma must lie in [0, 1]");
  if (!(small_cluster_frac >= 0.0 && small_cluster_frac < 1.0)) {
    throw ConfigError("finalize.small_cluster_frac must lie in [0, 1)");
  }
  if (sweeps == 0 || burn_in >= sweeps) throw ConfigError("need gibbs.sweeps > gibbs.burn_in >= 0");
  if (init_clusters == 0) throw ConfigError("gibbs.init_clusters must be positive");
  if (!(init_cov_scale > 0.0)) throw ConfigError("gibbs.init_cov_scale must be positive");
  try {
    niw.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int d = niw.dim();
  if (sigma_new.rows() != d || sigma_new.cols() != d) throw ConfigError("sigma_new has wrong shape");
  Eigen::LLT<Matrix> llt(sigma_new);
  if (llt.info() != Eigen::Success) throw ConfigError("sigma_new is not positive-definite");
}

void ClusterRecord::set_params(MVNParams p) {
  density = GaussianDensity(p);
  params = std::move(p);
}

ModelState::ModelState(std::shared_ptr<const RunConfig> config, std::size_t n_points)
    : config_(std::move(config)),
      prior_predictive_(config_->niw),
      z_(n_points, kDetached),
      a_(n_points, 0),
      p_(n_points, 0.0) {}

void ModelState::set_config(std::shared_ptr<const RunConfig> config) {
  if (config->dim() != dim()) throw std::invalid_argument("set_config: dimension change");
  config_ = std::move(config);
  prior_predictive_ = PredictiveDensity(config_->niw);
}

void ModelState::append_point() {
  z_.push_back(kDetached);
  a_.push_back(0);
  p_.push_back(0.0);
}

void ModelState::attach(std::size_t i, std::size_t k, const Observation& x) {
  if (z_[i] != kDetached) throw std::logic_error("attach: point already assigned");
  auto& c = clusters_.at(k);
  c.stats.add(x);
  if (a_[i]) ++c.flagged;
  z_[i] = static_cast<int>(k);
}

bool ModelState::detach(std::size_t i, const Observation& x) {
  const int k = z_[i];
  if (k == kDetached) throw std::logic_error("detach: point is not assigned");
  auto& c = clusters_[static_cast<std::size_t>(k)];
  c.stats.remove(x);
  if (a_[i]) --c.flagged;
  z_[i] = kDetached;
  if (c.stats.n > 0) return false;

  clusters_.erase(clusters_.begin() + k);
  for (int& id : z_) {
    if (id > k) --id;
  }
  return true;
}

std::size_t ModelState::spawn(std::size_t i, const Observation& x, MVNParams params) {
  ClusterRecord rec;
  rec.stats = SufficientStats::empty(dim());
  rec.set_params(std::move(params));
  clusters_.push_back(std::move(rec));
  const std::size_t k = clusters_.size() - 1;
  attach(i, k, x);
  return k;
}

void ModelState::set_flag(std::size_t i, bool flagged) {
  const bool was = a_[i] != 0;
  if (was == flagged) return;
  a_[i] = flagged ? 1 : 0;
  if (z_[i] != kDetached) {
    auto& c = clusters_[static_cast<std::size_t>(z_[i])];
    flagged ? ++c.flagged : --c.flagged;
  }
}

void ModelState::set_cluster_params(std::size_t k, MVNParams params) {
  clusters_.at(k).set_params(std::move(params));
}

void ModelState::flag_cluster(std::size_t k) {
  auto& c = clusters_.at(k);
  if (c.flagged == c.stats.n) return;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    if (z_[i] == static_cast<int>(k)) a_[i] = 1;
  }
  c.flagged = c.stats.n;
}

std::vector<kernels::MixtureComponent> ModelState::mixture() const {
  std::size_t total = 0;
  for (const auto& c : clusters_) total += c.size();
  std::vector<kernels::MixtureComponent> out;
  out.reserve(clusters_.size());
  const double log_total = std::log(static_cast<double>(total));
  for (const auto& c : clusters_) {
    out.push_back({std::log(static_cast<double>(c.size())) - log_total, c.density});
  }
  return out;
}

void ModelState::check_invariants(std::span<const Observation> data, bool require_attached) const {
  auto fail = [](const std::string& msg) { throw std::logic_error("ModelState invariant: " + msg); };
  if (data.size() != z_.size()) fail("data size differs from assignment count");
  if (a_.size() != z_.size() || p_.size() != z_.size()) fail("per-point arrays differ in length");

  const int d = dim();
  std::vector<SufficientStats> recomputed(clusters_.size(), SufficientStats::empty(d));
  std::vector<std::size_t> flagged(clusters_.size(), 0);
  std::size_t attached = 0;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    if (a_[i] > 1) fail("flag outside {0,1}");
    if (!(p_[i] >= 0.0 && p_[i] <= 1.0)) fail("tail probability outside [0,1]");
    if (z_[i] == kDetached) {
      if (require_attached) fail("point " + std::to_string(i) + " is detached");
      continue;
    }
    if (z_[i] < 0 || static_cast<std::size_t>(z_[i]) >= clusters_.size()) fail("dangling cluster id");
    recomputed[static_cast<std::size_t>(z_[i])].add(data[i]);
    if (a_[i]) ++flagged[static_cast<std::size_t>(z_[i])];
    ++attached;
  }
  std::size_t total = 0;
  for (std::size_t k = 0; k < clusters_.size(); ++k) {
    const auto& c = clusters_[k];
    if (c.stats.n == 0) fail("empty cluster " + std::to_string(k));
    if (c.stats.n != recomputed[k].n) fail("cluster size disagrees with assignments");
    if (c.flagged != flagged[k]) fail("cluster flag count disagrees with flags");
    const double scale = 1.0 + recomputed[k].sum_outer.cwiseAbs().maxCoeff();
    if ((c.stats.sum - recomputed[k].sum).cwiseAbs().maxCoeff() > 1e-8 * scale ||
        (c.stats.sum_outer - recomputed[k].sum_outer).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      fail("cluster sufficient statistics drifted");
    }
    total += c.stats.n;
  }
  if (total != attached) fail("cluster sizes do not sum to the attached point count");
}

ModelState ModelState::from_parts(std::shared_ptr<const RunConfig> config,
                                  std::vector<int> z,
                                  std::vector<std::uint8_t> a,
                                  std::vector<double> p,
                                  std::vector<ClusterRecord> clusters) {
  ModelState s(std::move(config), 0);
  s.z_ = std::move(z);
  s.a_ = std::move(a);
  s.p_ = std::move(p);
  s.clusters_ = std::move(clusters);
  return s;
}

Matrix floored_covariance(const Matrix& cov) {
  // Floor the spectrum so degenerate inputs (constant columns, N < d) still give a PD matrix.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const double top = std::max(1.0, eig.eigenvalues().maxCoeff());
  const Vector evals = eig.eigenvalues().cwiseMax(1e-6 * top);
  return eig.eigenvectors() * evals.asDiagonal() * eig.eigenvectors().transpose();
}

void fill_data_dependent(RunConfig& cfg, std::span<const Observation> data, const PriorScales& scales) {
  if (data.empty()) throw DataError("cannot derive priors from an empty dataset");
  MVNParams moments = sample_moments(data);
  const auto d = static_cast<int>(moments.mean.size());
  const Matrix cov = floored_covariance(moments.covariance);

  cfg.sigma_new = scales.sigma_new_scale * cov;
  cfg.niw.mu0 = moments.mean;
  cfg.niw.kappa0 = scales.kappa0;
  cfg.niw.nu0 = static_cast<double>(d) + scales.nu0_offset;
  cfg.niw.psi = scales.psi_scale * cov;
}

}  // namespace incad
