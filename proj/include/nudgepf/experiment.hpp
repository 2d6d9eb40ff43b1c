#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "nudgepf/config.hpp"
#include "nudgepf/metrics.hpp"

namespace nudgepf {

/// Version tag written in the first line of every CSV this harness emits.
inline constexpr const char* kCsvSchemaVersion = "nudgepf-csv v1";

std::unique_ptr<Model> make_model(const ExperimentConfig& cfg);

/// Truth at every window boundary (index 0 .. n_windows) and one observation
/// per window (index 1 .. n_windows; observations[k-1] belongs to window k).
struct TruthAndObs {
  std::vector<ModelState> truth;
  std::vector<Observation> observations;
};

/// Runs the truth on its own noise streams and perturbs h(truth) with iid
/// N(0, R) errors from the observation stream.
TruthAndObs generate_truth_and_obs(const ExperimentConfig& cfg, const Model& model);

void write_truth_and_obs(const std::filesystem::path& dir, const TruthAndObs& data,
                         const Model& model);

/// Particle states before the first window.
std::vector<ModelState> initial_ensemble(const ExperimentConfig& cfg, const Model& model);

/// Weighted ensemble mean and variance of one state component.
struct ComponentMoments {
  double mean = 0.0;
  double variance = 0.0;
};
ComponentMoments ensemble_moments(const WeightedEnsemble& ens, Eigen::Index component);

struct WindowResult {
  DiagnosticsRecord diagnostics;
  AssimilationReport report;
  ComponentMoments moments;  // of state component 0
  bool failed = false;
  std::string error;
};

struct RunResult {
  std::vector<WindowResult> windows;
  RankHistogram histogram{0};
};

/// Dispatch to the configured filter.
AssimilationReport assimilate(const ExperimentConfig& cfg, WeightedEnsemble& ens,
                              const Observation& y, const FilterContext& ctx);

/// Generate truth and observations, run the filter over every window and
/// write diagnostics.csv, ranks.csv, posterior.csv, truth.csv,
/// observations.csv, meta.json and snapshots/ into cfg.output_dir.
/// Pass write_files = false for an in-memory run.
RunResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Human-readable summary of one or more run directories.
std::string report_runs(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace nudgepf
