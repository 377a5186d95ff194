#include "incad/stream.hpp"

#include <algorithm>
#include <string>

#include "incad/errors.hpp"

namespace incad {

StreamState batch_init(std::span<const Observation> prefix,
                       std::shared_ptr<const RunConfig> config,
                       const StreamOptions& options,
                       RandomSource& rng,
                       double batch_fraction) {
  if (prefix.size() < kMinBatchPoints) {
    throw DataError("batch_init needs at least " + std::to_string(kMinBatchPoints) + " points, got " +
                    std::to_string(prefix.size()));
  }
  config->validate();
  ModelState model = initialize_state(config, prefix, rng);
  run_gibbs(model, prefix, rng);

  auto streaming = std::make_shared<RunConfig>(*config);
  streaming->ev_prop = options.ev_prop;
  model.set_config(std::move(streaming));

  StreamState state{std::move(model),
                    std::vector<Observation>(prefix.begin(), prefix.end()),
                    std::vector<Phase>(prefix.size(), Phase::kBatch),
                    batch_fraction,
                    0,
                    options};
  return state;
}

UpdateReport stream_update(StreamState& state, const Observation& x_new, RandomSource& rng) {
  ModelState& model = state.model;
  if (x_new.size() != model.dim()) throw DataError("stream_update: observation has wrong dimension");

  state.buffer.push_back(x_new);
  state.phases.push_back(Phase::kStream);
  model.append_point();
  const std::size_t idx = state.buffer.size() - 1;
  const std::span<const Observation> data(state.buffer);

  UpdateReport report;
  report.index = idx;

  const auto provisional = assignment_distribution(model, x_new, PointContext{});
  const auto best = static_cast<std::size_t>(std::max_element(provisional.begin(), provisional.end()) - provisional.begin());
  if (best == model.num_clusters()) {
    report.provisional_cluster = spawn_cluster(model, data, idx);
  } else {
    model.attach(idx, best, x_new);
    report.provisional_cluster = best;
  }

  const std::size_t passes = std::max<std::size_t>(1, state.options.tail_passes);
  for (std::size_t pass = 0; pass < passes; ++pass) {
    const TailView tail = compute_tail_view(model, data);
    const auto tail_points = tail.image.tail_indices();
    if (pass == 0) {
      report.tail_points = tail_points.size();
      report.fit_available = tail.fit.has_value();
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!tail.image.in_tail(i)) {
          model.set_tail_probability(i, 0.0);
          model.set_flag(i, false);
        }
      }
    }
    for (std::size_t i : tail_points) update_point(model, data, i, tail, rng);
    cluster_majority_relabel(model);
  }

  ++state.update_count;
  if (state.options.finalize_every > 0 && state.update_count % state.options.finalize_every == 0) {
    finalize_small_clusters(state);
  }
  report.clusters = model.num_clusters();
  report.flagged = static_cast<std::size_t>(std::count(model.flags().begin(), model.flags().end(), 1));
  return report;
}

void finalize_small_clusters(StreamState& state) { finalize_small_clusters(state.model); }

}  // namespace incad
