#include "incad/commands.hpp"

#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "incad/errors.hpp"
#include "incad/gibbs.hpp"
#include "incad/snapshot.hpp"

namespace incad {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ResultRecord make_record(const LabeledDataset& data, const ModelState& state, std::size_t i, const char* phase) {
  ResultRecord r;
  r.index = i;
  r.point = data.unstandardize(data.points[i]);
  r.cluster = state.assignment(i) + 1;
  r.anomaly_flag = state.flag(i);
  r.p = state.tail_probability(i);
  r.phase = phase;
  return r;
}

std::optional<Metrics> maybe_metrics(const LabeledDataset& data, const std::vector<std::uint8_t>& flags) {
  if (!data.labels) return std::nullopt;
  return compute_metrics(flags, *data.labels);
}

void write_events(const std::vector<UpdateReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : reports) {
    const nlohmann::json j{{"index", r.index},
                           {"provisional_cluster", r.provisional_cluster + 1},
                           {"tail_points", r.tail_points},
                           {"fit_available", r.fit_available},
                           {"clusters", r.clusters},
                           {"flagged", r.flagged}};
    out << j.dump() << '\n';
  }
}

Settings effective_settings(const CommandOptions& opt) {
  Settings s = opt.config ? load_settings(*opt.config) : Settings{};
  if (opt.seed) s.seed = *opt.seed;
  if (opt.batch_fraction) s.batch_fraction = *opt.batch_fraction;
  if (opt.fractions) s.fractions = *opt.fractions;
  s.validate();
  return s;
}

LabeledDataset require_input(const CommandOptions& opt, const Settings& s) {
  if (!opt.input) throw ConfigError(opt.command + " needs --input PATH");
  return load_csv(*opt.input, s.schema);
}

void report_metrics(const std::optional<Metrics>& m, const std::filesystem::path& out) {
  if (!m) {
    spdlog::warn("input has no label column; metrics.json not written");
    return;
  }
  write_metrics(*m, out / "metrics.json");
  spdlog::info("precision {:.4f} recall {:.4f} f_measure {:.4f}", m->precision, m->recall, m->f_measure);
}

int dispatch(const CommandOptions& opt) {
  const Settings s = effective_settings(opt);
  std::filesystem::create_directories(opt.out);

  if (opt.command == "simulate") {
    RandomSource rng(s.seed);
    const LabeledDataset data = generate_synthetic(s.synthetic, rng);
    write_dataset_csv(data, opt.out / "dataset.csv");
    return kExitOk;
  }
  if (opt.command == "batch") {
    const LabeledDataset data = require_input(opt, s);
    const BatchOutcome res = run_batch(s, data);
    write_results(res.records, opt.out / "results.jsonl");
    save_snapshot(res.state, opt.out / "state.json");
    report_metrics(res.metrics, opt.out);
    return kExitOk;
  }
  if (opt.command == "stream") {
    const LabeledDataset data = require_input(opt, s);
    const StreamOutcome res = run_stream(s, data, batch_prefix_size(data.size(), s.batch_fraction));
    write_results(res.records, opt.out / "results.jsonl");
    write_events(res.reports, opt.out / "events.jsonl");
    save_snapshot(res.state, opt.out / "state.json");
    report_metrics(res.metrics, opt.out);
    return kExitOk;
  }
  if (opt.command == "sensitivity") {
    const LabeledDataset data = require_input(opt, s);
    write_sensitivity_csv(run_sensitivity(s, data, s.fractions), opt.out / "sensitivity.csv");
    return kExitOk;
  }
  if (opt.command == "eval") {
    const LabeledDataset data = require_input(opt, s);
    if (!data.labels) throw DataError("eval needs a label column in --input");
    const auto records = read_results(opt.out / "results.jsonl");
    if (records.size() != data.size()) throw DataError("results.jsonl and --input differ in length");
    std::vector<std::uint8_t> flags(data.size(), 0);
    for (const auto& r : records) {
      if (r.index >= flags.size()) throw DataError("results.jsonl index out of range");
      flags[r.index] = r.anomaly_flag ? 1 : 0;
    }
    report_metrics(compute_metrics(flags, *data.labels), opt.out);
    return kExitOk;
  }
  throw ConfigError("unknown command '" + opt.command + "'");
}

}  // namespace

BatchOutcome run_batch(const Settings& settings, const LabeledDataset& data) {
  const auto start = Clock::now();
  auto config = std::make_shared<const RunConfig>(resolve_run_config(settings, data.points));
  RandomSource rng(settings.seed);
  ModelState state = initialize_state(config, data.points, rng);
  run_gibbs(state, data.points, rng);
  if (settings.batch_finalize) finalize_small_clusters(state);
  state.check_invariants(data.points);

  BatchOutcome out{std::move(state), {}, std::nullopt};
  out.records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.records.push_back(make_record(data, out.state, i, "batch"));
  out.metrics = maybe_metrics(data, out.state.flags());
  if (out.metrics) {
    out.metrics->runtime_seconds = seconds_since(start);
    out.metrics->batch_fraction = 1.0;
  }
  return out;
}

std::size_t batch_prefix_size(std::size_t n, double batch_fraction) {
  const auto k = static_cast<std::size_t>(std::floor(batch_fraction * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, std::min(kMinBatchPoints, n), n);
}

StreamOutcome run_stream(const Settings& settings,
                         const LabeledDataset& data,
                         std::size_t prefix,
                         const StreamObserver& observe) {
  if (prefix > data.size()) throw DataError("batch prefix is longer than the dataset");
  const auto start = Clock::now();
  const std::span<const Observation> head(data.points.data(), prefix);
  auto config = std::make_shared<const RunConfig>(resolve_run_config(settings, head));
  RandomSource rng(settings.seed);
  const double fraction = static_cast<double>(prefix) / static_cast<double>(data.size());

  StreamOutcome out{batch_init(head, config, settings.stream, rng, fraction), {}, std::nullopt, {}};
  for (std::size_t i = prefix; i < data.size(); ++i) {
    out.reports.push_back(stream_update(out.state, data.points[i], rng));
    if (observe) observe(out.state, out.reports.back());
    spdlog::debug("update {}: {} clusters, {} flagged", i, out.reports.back().clusters, out.reports.back().flagged);
  }
  finalize_small_clusters(out.state);
  out.state.model.check_invariants(out.state.buffer);

  const ModelState& m = out.state.model;
  out.records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.records.push_back(make_record(data, m, i, out.state.phases[i] == Phase::kStream ? "stream" : "batch"));
  }
  out.metrics = maybe_metrics(data, m.flags());
  if (out.metrics) {
    out.metrics->runtime_seconds = seconds_since(start);
    out.metrics->batch_fraction = fraction;
  }
  return out;
}

std::vector<SensitivityRow> run_sensitivity(const Settings& settings,
                                            const LabeledDataset& data,
                                            const std::vector<double>& fractions) {
  if (!data.labels) throw DataError("sensitivity needs a label column in the input");
  std::vector<SensitivityRow> rows;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("sensitivity fractions must lie in (0, 1)");
    const StreamOutcome res = run_stream(settings, data, batch_prefix_size(data.size(), f));
    rows.push_back({f, *res.metrics, res.state.model.num_clusters()});
    spdlog::info("fraction {:.2f}: f_measure {:.4f} in {:.2f}s", f, res.metrics->f_measure,
                 res.metrics->runtime_seconds);
  }
  return rows;
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "fraction,precision,recall,specificity,accuracy,f_measure,runtime_seconds,clusters\n";
  for (const auto& r : rows) {
    const Metrics& m = r.metrics;
    out << r.fraction << ',' << m.precision << ',' << m.recall << ',' << m.specificity << ',' << m.accuracy << ','
        << m.f_measure << ',' << m.runtime_seconds << ',' << r.clusters << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void configure_logging() {
  auto logger = spdlog::get("incad");
  if (!logger) logger = spdlog::stderr_color_mt("incad");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("INCAD_LOG");
  const std::string level = env ? env : "warn";
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") {
    spdlog::set_level(spdlog::level::warn);
    spdlog::warn("INCAD_LOG='{}' not recognised; using warn", level);
    return;
  }
  spdlog::set_level(parsed);
}

int run_command(const CommandOptions& options) {
  try {
    return dispatch(options);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
}

}  // namespace incad
