#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "incad/data_io.hpp"
#include "incad/metrics.hpp"
#include "incad/settings.hpp"
#include "incad/stream.hpp"

namespace incad {

struct BatchOutcome {
  ModelState state;
  std::vector<ResultRecord> records;
  std::optional<Metrics> metrics;
};

// Full Gibbs run over the whole dataset, then the small-cluster rule when
// batch.finalize is set.
BatchOutcome run_batch(const Settings& settings, const LabeledDataset& data);

using StreamObserver = std::function<void(const StreamState&, const UpdateReport&)>;

struct StreamOutcome {
  StreamState state;
  std::vector<ResultRecord> records;
  std::optional<Metrics> metrics;
  std::vector<UpdateReport> reports;
};

// Number of leading points used for batch initialisation.
std::size_t batch_prefix_size(std::size_t n, double batch_fraction);

// Batch-init on the first `prefix` points, then one stream_update per
// remaining point, then finalize_small_clusters. Priors come from the prefix.
StreamOutcome run_stream(const Settings& settings,
                         const LabeledDataset& data,
                         std::size_t prefix,
                         const StreamObserver& observe = {});

struct SensitivityRow {
  double fraction = 0.0;
  Metrics metrics;
  std::size_t clusters = 0;
};

std::vector<SensitivityRow> run_sensitivity(const Settings& settings,
                                            const LabeledDataset& data,
                                            const std::vector<double>& fractions);

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows, const std::filesystem::path& path);

struct CommandOptions {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> input;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> batch_fraction;
  std::optional<std::vector<double>> fractions;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Runs one CLI command, writing its artifacts under options.out. Maps
// ConfigError / DataError / NumericalError to exit codes 2 / 3 / 4.
int run_command(const CommandOptions& options);

// Reads INCAD_LOG (trace, debug, info, warn, error, off; default warn).
void configure_logging();

}  // namespace incad
