#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nudgepf/filters.hpp"
#include "nudgepf/parallel.hpp"

namespace nudgepf {

WeightedEnsemble WeightedEnsemble::from_states(const std::vector<ModelState>& states) {
  WeightedEnsemble ens;
  ens.particles.resize(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    ens.particles[i].x_start = states[i];
    ens.particles[i].x_end = states[i];
    ens.particles[i].end_valid = true;
  }
  ens.log_weights = Vector::Zero(static_cast<Eigen::Index>(states.size()));
  return ens;
}

void begin_window(WeightedEnsemble& ens, const Model& model, int n_substeps) {
  for (auto& p : ens.particles) {
    p.x_start = p.x_end;
    p.noise = NoiseWindow(n_substeps, model.noise_dim(), model.dt());
    p.control = ControlWindow(n_substeps, model.noise_dim());
    p.log_weight_increment = 0.0;
  }
}

NoiseWindow sample_noise_window(const Model& model, int n_substeps, const FilterContext& ctx,
                                std::size_t particle) {
  NoiseWindow w(n_substeps, model.noise_dim(), model.dt());
  for (int n = 1; n <= n_substeps; ++n) {
    RngStream stream(StreamKey{ctx.master_seed, particle, static_cast<std::uint64_t>(ctx.window_index),
                               static_cast<std::uint64_t>(n), 0, Purpose::model_noise});
    w.dW.row(n - 1) = sample_brownian(stream, model.noise_dim(), model.dt()).transpose();
  }
  return w;
}

void weigh_and_resample(WeightedEnsemble& ens, const FilterContext& ctx, std::uint64_t sequence,
                        AssimilationReport& report) {
  const auto n = static_cast<double>(ens.size());
  Vector w;
  try {
    w = normalize_log_weights(ens.log_weights);
  } catch (const DegenerateWeightsError&) {
    report.ess_pre_resample = 0.0;
    throw;
  }
  report.ess_pre_resample = ess(w);
  const bool want = ctx.resample_threshold >= 1.0 || report.ess_pre_resample / n < ctx.resample_threshold;
  if (ens.size() < 2 || !want) {
    ens.log_weights = w.array().log().matrix();
    return;
  }
  RngStream stream(StreamKey{ctx.master_seed, 0, static_cast<std::uint64_t>(ctx.window_index), 0,
                             sequence, Purpose::resample_uniform});
  const auto parents = systematic_resample(w, stream.uniform());
  std::vector<Particle> next;
  next.reserve(parents.size());
  for (int parent : parents) next.push_back(ens.particles[static_cast<std::size_t>(parent)]);
  ens.particles = std::move(next);
  ens.log_weights = Vector::Zero(static_cast<Eigen::Index>(ens.size()));
  report.resampled = true;
}

AssimilationReport bootstrap_assimilate(WeightedEnsemble& ens, const Observation& y,
                                        int n_substeps, const FilterContext& ctx) {
  const Model& model = *ctx.model;
  AssimilationReport report;
  begin_window(ens, model, n_substeps);
  std::vector<int> failed(ens.size(), 0);
  parallel_for(ens.size(), ctx.workers, [&](std::size_t i) {
    Particle& p = ens.particles[i];
    p.noise = sample_noise_window(model, n_substeps, ctx, i);
    try {
      p.x_end = propagate(model, p.x_start, p.noise, p.control);
      p.end_valid = true;
      p.log_weight_increment =
          -neg_log_likelihood(model.observe(p.x_end.dof), y.y, y.obs_variance);
    } catch (const PropagationError&) {
      p.end_valid = false;
      p.x_end = p.x_start;
      p.log_weight_increment = -std::numeric_limits<double>::infinity();
      failed[i] = 1;
    }
  });
  for (std::size_t i = 0; i < ens.size(); ++i) {
    ens.log_weights[static_cast<Eigen::Index>(i)] += ens.particles[i].log_weight_increment;
    report.propagation_failures += failed[i];
  }
  weigh_and_resample(ens, ctx, 0, report);
  return report;
}

FilterKind parse_filter_kind(std::string_view name) {
  if (name == "bootstrap") return FilterKind::bootstrap;
  if (name == "temper_jitter") return FilterKind::temper_jitter;
  if (name == "nudge") return FilterKind::nudge;
  throw std::invalid_argument("unknown filter '" + std::string(name) + "'");
}

std::string_view filter_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::bootstrap: return "bootstrap";
    case FilterKind::temper_jitter: return "temper_jitter";
    case FilterKind::nudge: return "nudge";
  }
  return "unknown";
}

}  // namespace nudgepf
