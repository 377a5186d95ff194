#include "incad/settings.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <type_traits>
#include <set>
#include <sstream>

#include "incad/errors.hpp"

namespace incad {
namespace {

using nlohmann::json;

class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  template <typename T>
  void operator()(const char* key, T& field) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      const bool ok = std::is_unsigned_v<T> ? it->is_number_unsigned() : it->is_number_integer();
      if (!ok) throw ConfigError(std::string("config key '") + key + "' needs a non-negative integer: " + it->dump());
    }
    if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      const bool ok = it->is_array() && std::all_of(it->begin(), it->end(), [](const json& e) { return e.is_number_unsigned(); });
      if (!ok) throw ConfigError(std::string("config key '") + key + "' needs a list of non-negative integers: " + it->dump());
    }
    try {
      field = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type: " + it->dump());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }

 private:
  const json& doc_;
  std::set<std::string> seen_;
};

struct Writer {
  json doc = json::object();
  template <typename T>
  void operator()(const char* key, const T& field) {
    doc[key] = field;
  }
};

struct KeyLister {
  std::vector<std::string> keys;
  template <typename T>
  void operator()(const char* key, const T&) {
    keys.emplace_back(key);
  }
};

template <typename S, typename V>
void visit(S& s, V&& v) {
  v("seed", s.seed);
  v("model.alpha", s.alpha);
  v("gibbs.gamma", s.gamma);
  v("gibbs.sweeps", s.sweeps);
  v("gibbs.burn_in", s.burn_in);
  v("gibbs.refit_per_point", s.refit_per_point);
  v("gibbs.relabel_per_point", s.relabel_per_point);
  v("gibbs.init_clusters", s.init_clusters);
  v("gibbs.init_cov_scale", s.init_cov_scale);
  v("gibbs.sigma_new_scale", s.priors.sigma_new_scale);
  v("niw.kappa0", s.priors.kappa0);
  v("niw.nu0_offset", s.priors.nu0_offset);
  v("niw.psi_scale", s.priors.psi_scale);
  v("tail.q", s.q);
  v("tail.ev_prop", s.ev_prop);
  v("tail.ev_alpha_scale", s.ev_alpha_scale);
  v("tail.min_points", s.min_tail_points);
  v("stream.batch_fraction", s.batch_fraction);
  v("stream.ev_prop", s.stream.ev_prop);
  v("stream.tail_passes", s.stream.tail_passes);
  v("stream.finalize_every", s.stream.finalize_every);
  v("finalize.small_cluster_frac", s.small_cluster_frac);
  v("batch.finalize", s.batch_finalize);
  v("data.features", s.schema.features);
  v("data.timestamp", s.schema.timestamp);
  v("data.label", s.schema.label);
  v("data.cluster", s.schema.cluster);
  v("data.standardize", s.schema.standardize);
  v("simulate.sizes", s.synthetic.cluster_sizes);
  v("simulate.anomalies", s.synthetic.n_anomalies);
  v("simulate.separation", s.synthetic.separation);
  v("simulate.cluster_variance", s.synthetic.cluster_variance);
  v("simulate.anomaly_cov_scale", s.synthetic.anomaly_cov_scale);
  v("sensitivity.fractions", s.fractions);
  v("parallel.density", s.parallel_density);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void Settings::validate() const {
  require(alpha > 0.0, "model.alpha must be positive");
  require(gamma >= 0.0 && gamma <= 1.0, "gibbs.gamma must lie in [0, 1]");
  require(sweeps > burn_in, "gibbs.sweeps must exceed gibbs.burn_in");
  require(init_clusters > 0, "gibbs.init_clusters must be positive");
  require(init_cov_scale > 0.0, "gibbs.init_cov_scale must be positive");
  require(priors.sigma_new_scale > 0.0, "gibbs.sigma_new_scale must be positive");
  require(priors.kappa0 > 0.0, "niw.kappa0 must be positive");
  require(priors.nu0_offset > 0.0, "niw.nu0_offset must be positive (nu0 > d - 1)");
  require(priors.psi_scale > 0.0, "niw.psi_scale must be positive");
  require(batch_fraction > 0.0 && batch_fraction < 1.0, "stream.batch_fraction must lie in (0, 1)");
  require(stream.ev_prop >= 0.0 && stream.ev_prop <= 1.0, "stream.ev_prop must lie in [0, 1]");
  require(stream.tail_passes > 0, "stream.tail_passes must be positive");
  require(small_cluster_frac >= 0.0 && small_cluster_frac < 1.0, "finalize.small_cluster_frac must lie in [0, 1)");
  require(!synthetic.cluster_sizes.empty() && synthetic.cluster_sizes.size() <= 4,
          "simulate.sizes must list between 1 and 4 cluster sizes");
  for (std::size_t n : synthetic.cluster_sizes) require(n > 0, "simulate.sizes entries must be positive");
  require(synthetic.n_anomalies > 0, "simulate.anomalies must be positive");
  require(synthetic.cluster_variance > 0.0, "simulate.cluster_variance must be positive");
  require(synthetic.anomaly_cov_scale > 0.0, "simulate.anomaly_cov_scale must be positive");
  for (double f : fractions) require(f > 0.0 && f < 1.0, "sensitivity.fractions entries must lie in (0, 1)");
  TailConfig t;
  t.q = q;
  t.ev_prop = ev_prop;
  t.alpha_base = alpha;
  t.ev_alpha_scale = ev_alpha_scale;
  t.min_tail_points = min_tail_points;
  t.validate();
}

Settings parse_settings(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object of flat keys");
  Settings s;
  Reader reader(doc);
  visit(s, reader);
  reader.reject_unknown();
  s.validate();
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_settings(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string settings_to_json(const Settings& settings) {
  Writer w;
  visit(settings, w);
  return w.doc.dump(2) + "\n";
}

std::vector<std::string> settings_keys() {
  Settings s;
  KeyLister lister;
  visit(s, lister);
  return lister.keys;
}

RunConfig resolve_run_config(const Settings& s, std::span<const Observation> data) {
  RunConfig cfg;
  cfg.alpha = s.alpha;
  cfg.gamma = s.gamma;
  cfg.ev_prop = s.ev_prop;
  cfg.q = s.q;
  cfg.ev_alpha_scale = s.ev_alpha_scale;
  cfg.min_tail_points = s.min_tail_points;
  cfg.small_cluster_frac = s.small_cluster_frac;
  cfg.sweeps = s.sweeps;
  cfg.burn_in = s.burn_in;
  cfg.seed = s.seed;
  cfg.refit_per_point = s.refit_per_point;
  cfg.relabel_per_point = s.relabel_per_point;
  cfg.init_clusters = s.init_clusters;
  cfg.init_cov_scale = s.init_cov_scale;
  cfg.parallel_density = s.parallel_density;
  fill_data_dependent(cfg, data, s.priors);
  cfg.validate();
  return cfg;
}

}  // namespace incad
