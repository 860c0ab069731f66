#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "adenoise/data.hpp"
#include "adenoise/enhancer.hpp"
#include "adenoise/trainer.hpp"
#include "adenoise/tuning.hpp"

namespace adenoise {

/// Every experiment knob in one place. Parsed strictly: unknown keys, wrong
/// types and out-of-range values are rejected with the offending key named.
struct Config {
  std::uint64_t seed = 1;
  int frame_size = kFrameSize;
  int hop = kHop;
  EnhancerOptions enhancer;
  TrainerConfig trainer;
  ManifestOptions data;
  bool use_rir = true;
  SynthConfig synth;
  TuneOptions tune;

  /// Propagates the root seed and shared options into the sub-configs.
  void sync();
};

Config config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& c);
Config load_config(const std::filesystem::path& path);

}  // namespace adenoise
