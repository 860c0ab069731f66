#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "adenoise/trainer.hpp"

namespace adenoise {

/// Binary checkpoint, little-endian throughout:
///
///   magic     8 bytes  "ADNZCKPT"
///   version   u32      kCheckpointVersion
///   meta_len  u32      length of the JSON metadata that follows
///   meta      bytes    shape, optimizer scalars, normalizer, baseline,
///                      initial parameters and the run config
///   count     u64      number of policy weights N
///   weights   N x f64
///   adam_m    N x f64
///   adam_v    N x f64
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainingState state;
  nlohmann::json config;
};

std::vector<std::uint8_t> encode_checkpoint(const TrainingState& state, const nlohmann::json& config);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state, const nlohmann::json& config);
/// Throws NotFound for a missing file and ParseError for a corrupt one.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adenoise
