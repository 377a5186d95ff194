#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "incad/data_io.hpp"
#include "incad/model.hpp"
#include "incad/stream.hpp"

namespace incad {

// Everything a config file can set. Field defaults are the documented
// defaults; config/default.json lists the same values.
struct Settings {
  std::uint64_t seed = 42;

  double alpha = 1.0;

  double gamma = 0.05;
  std::size_t sweeps = 100;
  std::size_t burn_in = 50;
  bool refit_per_point = false;
  bool relabel_per_point = false;
  std::size_t init_clusters = 10;
  double init_cov_scale = 1.0;
  PriorScales priors;

  double q = 0.05;
  double ev_prop = std::exp(-0.5);
  double ev_alpha_scale = 100.0;
  std::size_t min_tail_points = kDefaultMinTailPoints;

  double batch_fraction = 0.2;
  StreamOptions stream;

  double small_cluster_frac = 0.05;
  bool batch_finalize = true;

  CsvSchema schema;
  SyntheticConfig synthetic;
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.9};

  bool parallel_density = true;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Flat JSON object with module-prefixed keys ("tail.q", "gibbs.gamma", ...).
// Missing keys keep their defaults; unknown keys and wrong types throw ConfigError.
Settings parse_settings(const std::string& text);
Settings load_settings(const std::filesystem::path& path);
std::string settings_to_json(const Settings& settings);
std::vector<std::string> settings_keys();

// Fills the data-dependent matrices from `data` and validates the result.
RunConfig resolve_run_config(const Settings& settings, std::span<const Observation> data);

}  // namespace incad
