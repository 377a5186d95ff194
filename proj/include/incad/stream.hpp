#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "incad/gibbs.hpp"
#include "incad/model.hpp"
#include "incad/random.hpp"

namespace incad {

enum class Phase : std::uint8_t { kBatch, kStream };

struct StreamOptions {
  double ev_prop = std::exp(-0.5);  // replaces the batch ev_prop once streaming starts
  std::size_t tail_passes = 1;
  std::size_t finalize_every = 0;   // 0: only at end of stream
};

// Model plus every observation seen so far; the model always covers the
// whole buffer.
struct StreamState {
  ModelState model;
  std::vector<Observation> buffer;
  std::vector<Phase> phases;
  double batch_fraction = 0.2;
  std::size_t update_count = 0;
  StreamOptions options;
};

// Minimum prefix size accepted by batch_init.
inline constexpr std::size_t kMinBatchPoints = 30;

// Runs the batch sampler on a prefix of the stream, then switches ev_prop to
// the streaming value. Throws DataError when the prefix is too small.
StreamState batch_init(std::span<const Observation> prefix,
                       std::shared_ptr<const RunConfig> config,
                       const StreamOptions& options,
                       RandomSource& rng,
                       double batch_fraction = 0.2);

// What one stream_update did; emitted as a progress record by the CLI.
struct UpdateReport {
  std::size_t index = 0;
  std::size_t provisional_cluster = 0;
  std::size_t tail_points = 0;
  bool fit_available = false;
  std::size_t clusters = 0;
  std::size_t flagged = 0;
};

// Appends x_new (greedy provisional assignment), refreshes the density image
// over the whole buffer, and reruns the per-point Gibbs update on every point
// strictly below the tail threshold. Points outside the tail keep their
// assignments; their p drops to 0 and their flags are redrawn from it.
UpdateReport stream_update(StreamState& state, const Observation& x_new, RandomSource& rng);

// Flags every member of clusters with size <= small_cluster_frac * N.
void finalize_small_clusters(StreamState& state);

}  // namespace incad
