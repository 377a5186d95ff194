#include "incad/snapshot.hpp"

#include <json.hpp>

#include <bit>
#include <fstream>
#include <sstream>
#include <string>

#include "incad/errors.hpp"

namespace incad {
namespace {

using nlohmann::json;

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void real(double v) { word(std::bit_cast<std::uint64_t>(v)); }
  void word(std::uint64_t v) { bytes(&v, sizeof v); }
  void matrix(const Matrix& m) {
    word(static_cast<std::uint64_t>(m.rows()));
    word(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) real(m(i, j));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Vector vec_from(const json& j, int d) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != d) throw DataError("snapshot: vector has wrong length");
  return Eigen::Map<const Vector>(v.data(), d);
}

Matrix mat_from(const json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw DataError("snapshot: matrix has wrong shape");
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) m.row(i) = vec_from(j[static_cast<std::size_t>(i)], d).transpose();
  return m;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

json model_json(const ModelState& state) {
  json doc;
  doc["version"] = kSnapshotVersion;
  doc["dim"] = state.dim();
  doc["config_hash"] = hash_hex(config_hash(state.config()));
  doc["z"] = state.assignments();
  doc["a"] = state.flags();
  doc["p"] = state.tail_probabilities();
  json clusters = json::array();
  for (const auto& c : state.clusters()) {
    clusters.push_back({{"mean", vec_json(c.params.mean)},
                        {"cov", mat_json(c.params.covariance)},
                        {"n", c.stats.n},
                        {"sum", vec_json(c.stats.sum)},
                        {"sum_outer", mat_json(c.stats.sum_outer)},
                        {"flagged", c.flagged}});
  }
  doc["clusters"] = std::move(clusters);
  return doc;
}

json parse_doc(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("snapshot is not valid JSON: ") + e.what());
  }
}

// Model snapshots carry no data, so only the label bookkeeping can be verified.
void check_counts(const std::vector<int>& z, const std::vector<std::uint8_t>& a, const std::vector<ClusterRecord>& clusters) {
  std::vector<std::size_t> n(clusters.size(), 0), flagged(clusters.size(), 0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0 || static_cast<std::size_t>(z[i]) >= clusters.size()) throw DataError("snapshot: cluster id out of range");
    if (a[i] > 1) throw DataError("snapshot: flag outside {0,1}");
    ++n[static_cast<std::size_t>(z[i])];
    flagged[static_cast<std::size_t>(z[i])] += a[i];
  }
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (n[k] == 0 || n[k] != clusters[k].stats.n || flagged[k] != clusters[k].flagged) {
      throw DataError("snapshot: cluster " + std::to_string(k) + " counts disagree with assignments");
    }
  }
}

ModelState model_from_doc(const json& doc, std::shared_ptr<const RunConfig> config) {
  try {
    if (doc.at("version").get<int>() != kSnapshotVersion) throw DataError("snapshot: unsupported version");
    const int d = doc.at("dim").get<int>();
    if (d != config->dim()) throw ConfigError("snapshot dimension differs from config");
    if (doc.at("config_hash").get<std::string>() != hash_hex(config_hash(*config))) {
      throw ConfigError("snapshot was written under a different config");
    }
    auto z = doc.at("z").get<std::vector<int>>();
    auto a = doc.at("a").get<std::vector<std::uint8_t>>();
    auto p = doc.at("p").get<std::vector<double>>();
    std::vector<ClusterRecord> clusters;
    for (const auto& c : doc.at("clusters")) {
      ClusterRecord rec;
      rec.set_params(MVNParams{vec_from(c.at("mean"), d), mat_from(c.at("cov"), d)});
      rec.stats.n = c.at("n").get<std::size_t>();
      rec.stats.sum = vec_from(c.at("sum"), d);
      rec.stats.sum_outer = mat_from(c.at("sum_outer"), d);
      rec.flagged = c.at("flagged").get<std::size_t>();
      clusters.push_back(std::move(rec));
    }
    if (a.size() != z.size() || p.size() != z.size()) throw DataError("snapshot: per-point arrays differ in length");
    check_counts(z, a, clusters);
    return ModelState::from_parts(std::move(config), std::move(z), std::move(a), std::move(p), std::move(clusters));
  } catch (const json::exception& e) {
    throw DataError(std::string("snapshot: ") + e.what());
  } catch (const NumericalError& e) {
    throw DataError(std::string("snapshot: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

void check(const ModelState& model, std::span<const Observation> data) {
  try {
    model.check_invariants(data);
  } catch (const std::logic_error& e) {
    throw DataError(std::string("snapshot: ") + e.what());
  }
}

}  // namespace

std::uint64_t config_hash(const RunConfig& c) {
  Fnv1a h;
  for (double v : {c.alpha, c.gamma, c.ev_prop, c.q, c.ev_alpha_scale, c.small_cluster_frac, c.init_cov_scale}) h.real(v);
  for (std::size_t v : {c.min_tail_points, c.sweeps, c.burn_in, c.init_clusters}) h.word(v);
  h.word(c.seed);
  h.word((c.refit_per_point ? 1u : 0u) | (c.parallel_density ? 2u : 0u) | (c.relabel_per_point ? 4u : 0u));
  h.matrix(c.sigma_new);
  h.matrix(c.niw.mu0);
  h.real(c.niw.kappa0);
  h.real(c.niw.nu0);
  h.matrix(c.niw.psi);
  return h.value();
}

std::string snapshot_to_json(const ModelState& state) { return model_json(state).dump() + "\n"; }

std::string snapshot_to_json(const StreamState& state) {
  json doc = model_json(state.model);
  json buffer = json::array();
  for (const auto& x : state.buffer) buffer.push_back(vec_json(x));
  std::vector<int> phases;
  for (Phase ph : state.phases) phases.push_back(ph == Phase::kStream ? 1 : 0);
  doc["stream"] = {{"buffer", std::move(buffer)},
                   {"phases", phases},
                   {"batch_fraction", state.batch_fraction},
                   {"update_count", state.update_count},
                   {"ev_prop", state.options.ev_prop},
                   {"tail_passes", state.options.tail_passes},
                   {"finalize_every", state.options.finalize_every}};
  return doc.dump() + "\n";
}

ModelState model_from_json(const std::string& text, std::shared_ptr<const RunConfig> config) {
  return model_from_doc(parse_doc(text), std::move(config));
}

StreamState stream_from_json(const std::string& text, std::shared_ptr<const RunConfig> config) {
  const json doc = parse_doc(text);
  if (!doc.contains("stream")) throw DataError("snapshot has no stream section");
  const int d = config->dim();
  try {
    const json& s = doc["stream"];
    StreamOptions options;
    options.ev_prop = s.at("ev_prop").get<double>();
    options.tail_passes = s.at("tail_passes").get<std::size_t>();
    options.finalize_every = s.at("finalize_every").get<std::size_t>();

    // The stored state runs under the streaming ev_prop, so the hash is checked against that config.
    auto streaming = std::make_shared<RunConfig>(*config);
    streaming->ev_prop = options.ev_prop;
    ModelState model = model_from_doc(doc, streaming);

    std::vector<Observation> buffer;
    for (const auto& x : s.at("buffer")) buffer.push_back(vec_from(x, d));
    std::vector<Phase> phases;
    for (int ph : s.at("phases").get<std::vector<int>>()) phases.push_back(ph ? Phase::kStream : Phase::kBatch);
    if (buffer.size() != model.num_points() || phases.size() != buffer.size()) {
      throw DataError("snapshot: stream buffer does not match the model");
    }
    check(model, buffer);
    return StreamState{std::move(model), std::move(buffer), std::move(phases), s.at("batch_fraction").get<double>(),
                       s.at("update_count").get<std::size_t>(), options};
  } catch (const json::exception& e) {
    throw DataError(std::string("snapshot: ") + e.what());
  }
}

void save_snapshot(const ModelState& state, const std::filesystem::path& path) {
  write_file(path, snapshot_to_json(state));
}

void save_snapshot(const StreamState& state, const std::filesystem::path& path) {
  write_file(path, snapshot_to_json(state));
}

ModelState load_model_snapshot(const std::filesystem::path& path, std::shared_ptr<const RunConfig> config) {
  return model_from_json(read_file(path), std::move(config));
}

StreamState load_stream_snapshot(const std::filesystem::path& path, std::shared_ptr<const RunConfig> config) {
  return stream_from_json(read_file(path), std::move(config));
}

}  // namespace incad
