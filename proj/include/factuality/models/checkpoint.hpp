#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "factuality/models/model.hpp"

namespace factuality::models {

// Layout: the 8 bytes "FACTCKPT", a little-endian uint32 format version, a
// little-endian uint64 header length, the UTF-8 JSON header
//   {"config": {...}, "seed": N, "epoch": N, "metadata": {...},
//    "tensors": [{"name": ..., "shape": [...]}, ...]}
// and then every tensor's values as little-endian IEEE-754 doubles in header
// order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

struct LoadedCheckpoint {
  Model model;
  CheckpointInfo info;
};

nlohmann::json config_to_json(const ModelConfig& config);
// Throws ConfigError on unknown or ill-typed fields.
ModelConfig config_from_json(const nlohmann::json& j);

void save_checkpoint(std::ostream& out, const Model& model, const CheckpointInfo& info);
void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointInfo& info);
// Throws DataError on a truncated or inconsistent file.
LoadedCheckpoint load_checkpoint(std::istream& in);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace factuality::models
