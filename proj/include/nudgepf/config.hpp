#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "nudgepf/filters.hpp"
#include "nudgepf/linear_sde.hpp"
#include "nudgepf/sks.hpp"

namespace nudgepf {

enum class ModelKind { linear_sde, sks };

struct LinearSettings {
  LinearSdeParams params;
  double obs_variance = 0.01;
  /// When set, every observation takes this value instead of a noisy truth.
  std::optional<double> fixed_observation;
};

struct SksSettings {
  SksParams params;
  double obs_variance = 2.5;
  int spin_up_steps = 200;
  int spread_steps = 20;
};

/// One experiment: a model preset, a filter and its parameters.
struct ExperimentConfig {
  std::string preset = "linear_verification";
  ModelKind model = ModelKind::linear_sde;
  FilterKind filter = FilterKind::nudge;
  int particles = 300;
  std::uint64_t seed = 1;
  int n_windows = 1;
  int steps_per_window = 10;
  int workers = 1;
  double resample_threshold = 1.0;
  bool abort_on_error = true;
  bool write_snapshots = true;
  std::filesystem::path output_dir = "run";

  LinearSettings linear;
  SksSettings sks;
  TemperJitterOptions temper_jitter;
  NudgeOptions nudge;

  double obs_variance() const {
    return model == ModelKind::linear_sde ? linear.obs_variance : sks.obs_variance;
  }
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// "linear_verification" or "sks_benchmark".
ExperimentConfig preset_config(const std::string& name);

/// Start from the preset named by j["preset"] (default linear_verification)
/// and override every key that is present.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace nudgepf
