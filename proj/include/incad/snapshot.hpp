#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "incad/model.hpp"
#include "incad/stream.hpp"

namespace incad {

inline constexpr int kSnapshotVersion = 1;

// FNV-1a 64 over the exact bit patterns of every RunConfig field.
std::uint64_t config_hash(const RunConfig& config);

// JSON checkpoint of (z, a, p, clusters, config hash). Doubles round-trip exactly.
std::string snapshot_to_json(const ModelState& state);
std::string snapshot_to_json(const StreamState& state);

// Throws ConfigError when the stored hash does not match `config`, DataError on
// malformed or unsupported documents.
ModelState model_from_json(const std::string& text, std::shared_ptr<const RunConfig> config);
StreamState stream_from_json(const std::string& text, std::shared_ptr<const RunConfig> config);

void save_snapshot(const ModelState& state, const std::filesystem::path& path);
void save_snapshot(const StreamState& state, const std::filesystem::path& path);
ModelState load_model_snapshot(const std::filesystem::path& path, std::shared_ptr<const RunConfig> config);
StreamState load_stream_snapshot(const std::filesystem::path& path, std::shared_ptr<const RunConfig> config);

}  // namespace incad
