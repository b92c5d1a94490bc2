#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc2/smc2.hpp"

namespace smc2 {

enum class Transform { None, LogReturns100 };

std::string_view to_string(Transform t) noexcept;
Transform transform_from_string(std::string_view s);

struct DataConfig {
  std::string model = "sv";          ///< "sv" or "lgssm"
  std::optional<std::string> path;   ///< CSV of observations or prices
  Transform transform = Transform::None;
  std::size_t synthetic_T = 100;     ///< synthetic data has T+1 observations
  std::vector<double> synthetic_theta;  ///< empty: model default
  std::uint64_t synthetic_seed = 2024;
  double lgssm_sigma_x = 1.0;
  double lgssm_sigma_y = 0.5;
};

struct ExperimentConfig {
  std::vector<Variant> variants;  ///< empty: just the top-level variant
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Runs per seed. With r > 1 the run seeds are derived from (seed, replicate)
  /// and Fig-3 statistics are also reported per seed block.
  std::size_t replicates = 1;
  std::vector<double> tau_sweep;  ///< extra variant-C runs, one per tau
  std::string output = "out";
};

struct RunConfig {
  Smc2Config smc2;
  DataConfig data;
  ExperimentConfig experiment;
  std::vector<std::string> warnings;
};

/// Parses a JSON config. Unknown keys, wrong types and out-of-range values
/// raise ConfigError naming the key path; malformed JSON names the line.
/// Relative data paths are resolved against `base_dir`.
RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig parse_config(const std::filesystem::path& path);

/// Every setting after defaults were applied, in the input key layout.
nlohmann::json config_to_json(const RunConfig& config);

/// Worker count from SMC2_WORKERS if set (ConfigError if malformed), else `fallback`.
std::size_t workers_from_env(std::size_t fallback);

}  // namespace smc2
