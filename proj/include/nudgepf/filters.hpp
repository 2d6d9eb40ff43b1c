#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nudgepf/model.hpp"
#include "nudgepf/optimize.hpp"
#include "nudgepf/rng.hpp"
#include "nudgepf/weights.hpp"

namespace nudgepf {

/// A particle's state at the window start, the increments and control that
/// carry it through the window, and the cached end state.
struct Particle {
  ModelState x_start;
  NoiseWindow noise;
  ControlWindow control;
  ModelState x_end;
  bool end_valid = false;
  double log_weight_increment = 0.0;
};

struct WeightedEnsemble {
  std::vector<Particle> particles;
  Vector log_weights;

  std::size_t size() const { return particles.size(); }
  /// Build an equally weighted ensemble whose windows end at the given states.
  static WeightedEnsemble from_states(const std::vector<ModelState>& states);
};

/// Everything a filter needs besides the ensemble and the data.
struct FilterContext {
  const Model* model = nullptr;
  std::uint64_t master_seed = 0;
  int window_index = 0;
  int workers = 1;
  /// Resample when ESS / N_p < threshold; >= 1 means every window.
  double resample_threshold = 1.0;
};

/// What happened during one assimilation.
struct AssimilationReport {
  double ess_pre_resample = 0.0;
  bool resampled = false;
  int propagation_failures = 0;
  // temper-jitter
  int tempering_stages = 0;
  int adapt_warnings = 0;
  // nudging
  int stage1_failures = 0;
  int stage2_failures = 0;
  int stage3_failures = 0;
  // jittering
  long jitter_proposals = 0;
  long jitter_accepts = 0;
};

/// Start a new window: x_start <- x_end, zero noise and control.
void begin_window(WeightedEnsemble& ens, const Model& model, int n_substeps);

/// Fresh N(0, dt) increments for every substep of one particle's window.
NoiseWindow sample_noise_window(const Model& model, int n_substeps, const FilterContext& ctx,
                                std::size_t particle);

/// Normalise, record ESS, resample per the context threshold, reset weights.
/// `sequence` separates repeated resamplings within one window.
void weigh_and_resample(WeightedEnsemble& ens, const FilterContext& ctx, std::uint64_t sequence,
                        AssimilationReport& report);

// ---------------------------------------------------------------------------
// Bootstrap

AssimilationReport bootstrap_assimilate(WeightedEnsemble& ens, const Observation& y,
                                        int n_substeps, const FilterContext& ctx);

// ---------------------------------------------------------------------------
// Jittering

/// rho w + sqrt(1 - rho^2) xi with rho = (2 - delta) / (2 + delta).
NoiseWindow pcn_propose(const NoiseWindow& w, double delta, const NoiseWindow& xi);

struct JitterOptions {
  double theta = 1.0;
  double delta = 0.15;
  int n_steps = 5;
  /// Target exp(-theta (Phi + Girsanov penalty)) with the control held fixed;
  /// otherwise exp(-theta Phi).
  bool include_penalty = false;
};

struct JitterOutcome {
  int accepted = 0;
  int proposals = 0;
  double energy = 0.0;  // Phi (or Phi-hat) of the final state
};

/// Metropolis-Hastings on the particle's noise window with pCN proposals.
/// Requires p.end_valid. Proposals whose propagation fails are rejected.
JitterOutcome mcmc_jitter(Particle& p, const Observation& y, const Model& model,
                          const JitterOptions& opt, RngStream& stream);

// ---------------------------------------------------------------------------
// Temper-jitter

struct DeltaTheta {
  double value = 0.0;
  bool warning = false;
};

/// Largest step <= theta_remaining keeping ESS(exp(dtheta * log_lik)) / N_p
/// >= target, by bisection to 1e-3. Falls back to 1e-6 with a warning.
DeltaTheta adapt_delta_theta(const Vector& log_lik, double theta_remaining, double target);

struct TemperJitterOptions {
  double ess_target = 0.8;
  double delta = 0.15;
  int n_jitter = 5;
};

AssimilationReport temper_jitter_assimilate(WeightedEnsemble& ens, const Observation& y,
                                            int n_substeps, const FilterContext& ctx,
                                            const TemperJitterOptions& opt);

// ---------------------------------------------------------------------------
// Girsanov nudging

struct PhiBounds {
  Vector phi_min;
  Vector phi_max;
};

/// sigma * sum(phi) - ESS(phi); ESS evaluated after a shift by min(phi).
double stage2_objective(const Vector& phi, double sigma);
double stage2_objective(const Vector& phi, double sigma, Vector& grad);

struct Stage2Result {
  Vector phi_star;
  double objective = 0.0;
  OptimStatus status = OptimStatus::converged;
};

/// Box-constrained minimisation of stage2_objective over [phi_min, phi_max].
Stage2Result stage2_solve(const PhiBounds& bounds, double sigma, double tol = 1e-6,
                          int max_iter = 500);

struct Stage3Result {
  double s = 0.0;
  bool ok = true;
};

/// Scale s in [0, 1] with objective(s * lambda_star) = phi_star (Brent, tol on s).
Stage3Result stage3_scale(const SubstepObjective& objective, const Vector& lambda_star,
                          double phi_star, double tol = 1e-8);

struct NudgeOptions {
  double sigma = 0.03;
  int n_jitter = 5;
  double delta = 0.05;
  int stage1_max_iter = 20;
  double stage1_tol = 1e-6;
  double stage2_tol = 1e-6;
  int stage2_max_iter = 500;
  double stage3_tol = 1e-8;
  /// When false the Stage 1 minimiser is skipped (control forced to zero).
  bool stage1_enabled = true;
};

AssimilationReport nudge_assimilate(WeightedEnsemble& ens, const Observation& y, int n_substeps,
                                    const FilterContext& ctx, const NudgeOptions& opt);

// ---------------------------------------------------------------------------

enum class FilterKind { bootstrap, temper_jitter, nudge };

FilterKind parse_filter_kind(std::string_view name);
std::string_view filter_name(FilterKind kind);

}  // namespace nudgepf
