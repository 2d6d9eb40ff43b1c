#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nudgepf/filters.hpp"
#include "nudgepf/parallel.hpp"

namespace nudgepf {
namespace {

constexpr double kMinDeltaTheta = 1e-6;
constexpr double kBisectionTol = 1e-3;

bool meets_target(const Vector& log_lik, double dtheta, double target) {
  const Vector phi = -dtheta * log_lik;
  return ess_from_phi(phi) / static_cast<double>(log_lik.size()) >= target;
}

}  // namespace

DeltaTheta adapt_delta_theta(const Vector& log_lik, double theta_remaining, double target) {
  if (!(theta_remaining > 0.0 && theta_remaining <= 1.0)) {
    throw std::invalid_argument("adapt_delta_theta: theta_remaining must be in (0, 1]");
  }
  if (!(target >= 0.0 && target < 1.0)) {
    throw std::invalid_argument("adapt_delta_theta: target must be in [0, 1)");
  }
  if (meets_target(log_lik, theta_remaining, target)) return {theta_remaining, false};
  if (!meets_target(log_lik, kMinDeltaTheta, target)) return {kMinDeltaTheta, true};
  double lo = kMinDeltaTheta;
  double hi = theta_remaining;
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    (meets_target(log_lik, mid, target) ? lo : hi) = mid;
  }
  return {lo, false};
}

AssimilationReport temper_jitter_assimilate(WeightedEnsemble& ens, const Observation& y,
                                            int n_substeps, const FilterContext& ctx,
                                            const TemperJitterOptions& opt) {
  const Model& model = *ctx.model;
  AssimilationReport report;
  report.ess_pre_resample = std::numeric_limits<double>::infinity();
  begin_window(ens, model, n_substeps);

  const auto n = ens.size();
  Vector log_lik(static_cast<Eigen::Index>(n));
  std::vector<int> failed(n, 0);
  parallel_for(n, ctx.workers, [&](std::size_t i) {
    Particle& p = ens.particles[i];
    p.noise = sample_noise_window(model, n_substeps, ctx, i);
    try {
      p.x_end = propagate(model, p.x_start, p.noise, p.control);
      p.end_valid = true;
      log_lik[static_cast<Eigen::Index>(i)] =
          -neg_log_likelihood(model.observe(p.x_end.dof), y.y, y.obs_variance);
    } catch (const PropagationError&) {
      p.end_valid = false;
      p.x_end = p.x_start;
      log_lik[static_cast<Eigen::Index>(i)] = -std::numeric_limits<double>::infinity();
      failed[i] = 1;
    }
  });
  for (int f : failed) report.propagation_failures += f;

  // Resampling must happen every stage regardless of the context threshold.
  FilterContext stage_ctx = ctx;
  stage_ctx.resample_threshold = 1.0;

  double theta = 0.0;
  std::uint64_t stage = 0;
  while (theta < 1.0) {
    const double remaining = 1.0 - theta;
    Vector finite_lik = log_lik;
    const double floor = finite_lik.array().isFinite().select(finite_lik.array(), 0.0).minCoeff();
    for (auto& v : finite_lik) {
      if (!std::isfinite(v)) v = floor - 1e6;  // failed particles: effectively zero weight
    }
    DeltaTheta step = adapt_delta_theta(finite_lik, remaining, opt.ess_target);
    if (step.warning) ++report.adapt_warnings;
    const bool last = step.value >= remaining;
    ens.log_weights += step.value * log_lik;

    AssimilationReport stage_report;
    weigh_and_resample(ens, stage_ctx, stage, stage_report);
    report.ess_pre_resample = std::min(report.ess_pre_resample, stage_report.ess_pre_resample);
    report.resampled = true;
    theta = last ? 1.0 : theta + step.value;

    // Re-derive likelihoods of the resampled ensemble while jittering.
    JitterOptions jopt{theta, opt.delta, opt.n_jitter, false};
    std::vector<JitterOutcome> outcomes(n);
    parallel_for(n, ctx.workers, [&](std::size_t i) {
      Particle& p = ens.particles[i];
      RngStream stream(StreamKey{ctx.master_seed, i, static_cast<std::uint64_t>(ctx.window_index),
                                 0, stage, Purpose::jitter_noise});
      if (p.end_valid) {
        outcomes[i] = mcmc_jitter(p, y, model, jopt, stream);
        log_lik[static_cast<Eigen::Index>(i)] = -outcomes[i].energy;
      } else {
        log_lik[static_cast<Eigen::Index>(i)] = -std::numeric_limits<double>::infinity();
      }
    });
    for (const auto& o : outcomes) {
      report.jitter_proposals += o.proposals;
      report.jitter_accepts += o.accepted;
    }
    ++stage;
  }
  report.tempering_stages = static_cast<int>(stage);
  return report;
}

}  // namespace nudgepf
