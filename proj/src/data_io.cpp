#include "incad/data_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "incad/errors.hpp"

namespace incad {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<double> parse_timestamp(const std::string& cell) {
  if (auto v = parse_number(cell)) return v;
  for (const char* fmt : {"%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d"}) {
    std::tm tm{};
    std::istringstream in(cell);
    in >> std::get_time(&tm, fmt);
    if (!in.fail()) return static_cast<double>(timegm(&tm));
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

bool operator==(const ResultRecord& a, const ResultRecord& b) {
  return a.index == b.index && a.point.size() == b.point.size() && a.point == b.point && a.cluster == b.cluster &&
         a.anomaly_flag == b.anomaly_flag && a.p == b.p && a.phase == b.phase;
}

Observation LabeledDataset::unstandardize(const Observation& z) const {
  return (z.array() * column_scale.array() + column_mean.array()).matrix();
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_row(line);

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  std::optional<std::size_t> ts_col;
  if (!schema.timestamp.empty()) {
    ts_col = find_col(schema.timestamp);
    if (!ts_col) throw DataError(path.string() + ": timestamp column '" + schema.timestamp + "' not found");
  }
  const auto label_col = schema.label.empty() ? std::nullopt : find_col(schema.label);
  const auto cluster_col = schema.cluster.empty() ? std::nullopt : find_col(schema.cluster);

  std::vector<std::size_t> feature_cols;
  LabeledDataset ds;
  if (schema.features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == ts_col || c == label_col || c == cluster_col) continue;
      feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.features) {
      const auto c = find_col(name);
      if (!c) throw DataError(path.string() + ": feature column '" + name + "' not found");
      feature_cols.push_back(*c);
    }
  }
  if (ts_col) ds.feature_names.push_back(header[*ts_col]);
  for (std::size_t c : feature_cols) ds.feature_names.push_back(header[c]);
  if (ds.feature_names.empty()) throw DataError(path.string() + ": no feature columns");

  const auto d = static_cast<Eigen::Index>(ds.feature_names.size());
  std::vector<std::uint8_t> labels;
  std::vector<int> cluster_ids;
  std::optional<double> t0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(header.size()));
    }
    Observation x(d);
    Eigen::Index j = 0;
    if (ts_col) {
      const auto t = parse_timestamp(cells[*ts_col]);
      if (!t) throw DataError(path.string() + ": row " + std::to_string(row) + ": bad timestamp '" + cells[*ts_col] + "'");
      if (!t0) t0 = *t;
      x(j++) = *t - *t0;
    }
    for (std::size_t c : feature_cols) {
      const auto v = parse_number(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(path.string() + ": row " + std::to_string(row) + ": non-numeric value '" + cells[c] +
                        "' in column '" + header[c] + "'");
      }
      x(j++) = *v;
    }
    if (label_col) {
      const auto v = parse_number(cells[*label_col]);
      if (!v || (*v != 0.0 && *v != 1.0)) {
        throw DataError(path.string() + ": row " + std::to_string(row) + ": label must be 0 or 1");
      }
      labels.push_back(*v != 0.0 ? 1 : 0);
    }
    if (cluster_col) {
      const auto v = parse_number(cells[*cluster_col]);
      if (!v) throw DataError(path.string() + ": row " + std::to_string(row) + ": bad cluster id");
      cluster_ids.push_back(static_cast<int>(*v));
    }
    ds.points.push_back(std::move(x));
  }
  if (ds.points.empty()) throw DataError(path.string() + ": no data rows");
  if (label_col) ds.labels = std::move(labels);
  if (cluster_col) ds.cluster_ids = std::move(cluster_ids);

  ds.column_mean = Vector::Zero(d);
  ds.column_scale = Vector::Ones(d);
  if (schema.standardize) {
    const double n = static_cast<double>(ds.points.size());
    for (const auto& x : ds.points) ds.column_mean += x;
    ds.column_mean /= n;
    Vector var = Vector::Zero(d);
    for (const auto& x : ds.points) var += (x - ds.column_mean).cwiseAbs2();
    var /= n;
    for (Eigen::Index j = 0; j < d; ++j) ds.column_scale(j) = var(j) > 0.0 ? std::sqrt(var(j)) : 1.0;
    for (auto& x : ds.points) x = ((x - ds.column_mean).array() / ds.column_scale.array()).matrix();
  }
  return ds;
}

LabeledDataset generate_synthetic(const SyntheticConfig& cfg, RandomSource& rng) {
  if (cfg.cluster_sizes.empty() || cfg.cluster_sizes.size() > 4) {
    throw ConfigError("simulate: between 1 and 4 normal clusters are supported");
  }
  const double s = cfg.separation;
  const double centres[4][2] = {{-s, -s}, {s, -s}, {-s, s}, {s, s}};
  const double sd = std::sqrt(cfg.cluster_variance);
  const double anomaly_sd = std::sqrt(cfg.anomaly_cov_scale);

  LabeledDataset ds;
  ds.feature_names = {"x0", "x1"};
  std::vector<std::uint8_t> labels;
  std::vector<int> ids;
  auto emit_cluster = [&](std::size_t c) {
    for (std::size_t i = 0; i < cfg.cluster_sizes[c]; ++i) {
      Observation x(2);
      x << centres[c][0] + sd * rng.normal(), centres[c][1] + sd * rng.normal();
      ds.points.push_back(std::move(x));
      labels.push_back(0);
      ids.push_back(static_cast<int>(c) + 1);
    }
  };
  const std::size_t last = cfg.cluster_sizes.size() - 1;
  for (std::size_t c = 0; c < last; ++c) emit_cluster(c);
  for (std::size_t i = 0; i < cfg.n_anomalies; ++i) {
    Observation x(2);
    x << anomaly_sd * rng.normal(), anomaly_sd * rng.normal();
    ds.points.push_back(std::move(x));
    labels.push_back(1);
    ids.push_back(0);
  }
  emit_cluster(last);

  ds.labels = std::move(labels);
  ds.cluster_ids = std::move(ids);
  ds.column_mean = Vector::Zero(2);
  ds.column_scale = Vector::Ones(2);
  return ds;
}

void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < data.feature_names.size(); ++j) out << (j ? "," : "") << data.feature_names[j];
  if (data.labels) out << ",label";
  if (data.cluster_ids) out << ",cluster";
  out << '\n';
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const Observation x = data.unstandardize(data.points[i]);
    for (Eigen::Index j = 0; j < x.size(); ++j) out << (j ? "," : "") << format_double(x(j));
    if (data.labels) out << ',' << static_cast<int>((*data.labels)[i]);
    if (data.cluster_ids) out << ',' << (*data.cluster_ids)[i];
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& r : records) {
    json j;
    j["index"] = r.index;
    j["point"] = std::vector<double>(r.point.data(), r.point.data() + r.point.size());
    j["cluster"] = r.cluster;
    j["anomaly_flag"] = r.anomaly_flag ? 1 : 0;
    j["p"] = r.p;
    j["phase"] = r.phase;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<ResultRecord> records;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ResultRecord r;
      r.index = j.at("index").get<std::size_t>();
      const auto pt = j.at("point").get<std::vector<double>>();
      r.point = Eigen::Map<const Vector>(pt.data(), static_cast<Eigen::Index>(pt.size()));
      r.cluster = j.at("cluster").get<int>();
      r.anomaly_flag = j.at("anomaly_flag").get<int>() != 0;
      r.p = j.at("p").get<double>();
      r.phase = j.at("phase").get<std::string>();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(row) + ": " + e.what());
    }
  }
  return records;
}

void write_metrics(const Metrics& m, const std::filesystem::path& path) {
  json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["specificity"] = m.specificity;
  j["accuracy"] = m.accuracy;
  j["f_measure"] = m.f_measure;
  j["runtime_seconds"] = m.runtime_seconds;
  j["batch_fraction"] = m.batch_fraction;
  j["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
  j["degenerate"] = m.degenerate;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

Metrics read_metrics(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    const json j = json::parse(in);
    Metrics m;
    m.precision = j.at("precision");
    m.recall = j.at("recall");
    m.specificity = j.at("specificity");
    m.accuracy = j.at("accuracy");
    m.f_measure = j.at("f_measure");
    m.runtime_seconds = j.at("runtime_seconds");
    m.batch_fraction = j.value("batch_fraction", 1.0);
    if (j.contains("confusion")) {
      const auto& c = j["confusion"];
      m.tp = c.at("tp");
      m.fp = c.at("fp");
      m.fn = c.at("fn");
      m.tn = c.at("tn");
    }
    m.degenerate = j.value("degenerate", false);
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace incad
