#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "incad/metrics.hpp"
#include "incad/mvn.hpp"
#include "incad/random.hpp"

namespace incad {

struct LabeledDataset {
  std::vector<Observation> points;
  std::optional<std::vector<std::uint8_t>> labels;  // 1 = true anomaly
  std::optional<std::vector<int>> cluster_ids;
  std::vector<std::string> feature_names;
  // Per-column shift and scale applied on load; identity when not standardized.
  Vector column_mean;
  Vector column_scale;

  std::size_t size() const noexcept { return points.size(); }
  int dim() const noexcept { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  Observation unstandardize(const Observation& z) const;
};

struct CsvSchema {
  std::vector<std::string> features;  // empty: every column not used otherwise
  std::string timestamp;              // empty: none
  std::string label = "label";        // ignored when the column is absent
  std::string cluster = "cluster";    // ignored when the column is absent
  bool standardize = true;
};

// Reads a headed CSV. A timestamp column becomes a numeric feature (seconds
// since the first record, numeric or "YYYY-MM-DD HH:MM:SS"). Features are
// z-scored when schema.standardize is set. Throws DataError naming the row on
// malformed input.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Two-dimensional Gaussian clusters at (+-separation, +-separation) plus
// anomalies from N(0, anomaly_cov_scale * I). Point order: every normal
// cluster except the last, then the anomalies, then the last cluster.
struct SyntheticConfig {
  std::vector<std::size_t> cluster_sizes{100, 100, 100, 77};
  std::size_t n_anomalies = 23;
  double separation = 10.0;
  double cluster_variance = 1.0;
  double anomaly_cov_scale = 25.0;
};

LabeledDataset generate_synthetic(const SyntheticConfig& cfg, RandomSource& rng);

// Header: feature names, then label and cluster columns when present.
void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path);

struct ResultRecord {
  std::size_t index = 0;
  Observation point;
  int cluster = 0;  // 1-based
  bool anomaly_flag = false;
  double p = 0.0;
  std::string phase = "batch";

  friend bool operator==(const ResultRecord& a, const ResultRecord& b);
};

// One JSON object per line with the ResultRecord field names.
void write_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path);
std::vector<ResultRecord> read_results(const std::filesystem::path& path);

void write_metrics(const Metrics& metrics, const std::filesystem::path& path);
Metrics read_metrics(const std::filesystem::path& path);

}  // namespace incad
