#include <cmath>
#include <limits>
#include <optional>

#include "nudgepf/filters.hpp"
#include "nudgepf/parallel.hpp"

namespace nudgepf {
namespace {

// Per-particle scratch for the substep loop.
struct NudgeSlot {
  Vector x_before;  // state entering the current substep
  bool valid = true;
  std::optional<SubstepObjective> objective;
  Vector lambda_star;
  double phi_min = 0.0;
  double phi_max = 0.0;
  bool stage1_failed = false;
  bool stage3_failed = false;
};

// Minimise Phi-hat over one control row, starting from zero control.
void stage1(NudgeSlot& slot, const NudgeOptions& opt) {
  const SubstepObjective& obj = *slot.objective;
  const Vector zero = Vector::Zero(obj.row().size());
  slot.phi_max = obj.value(zero);
  slot.lambda_star = zero;
  slot.phi_min = slot.phi_max;
  if (!opt.stage1_enabled) return;
  try {
    BoxProblem problem = BoxProblem::unbounded(
        [&obj](const Vector& row, Vector& grad) { return obj.value_and_gradient(row, grad); }, zero);
    problem.tol = opt.stage1_tol;
    problem.max_iter = opt.stage1_max_iter;
    const OptimResult res = lbfgs_minimize(problem);
    if (std::isfinite(res.f) && res.x.allFinite() && res.f <= slot.phi_max) {
      slot.lambda_star = res.x;
      slot.phi_min = res.f;
    } else {
      slot.stage1_failed = true;
    }
  } catch (const std::exception&) {
    slot.stage1_failed = true;
  }
}

}  // namespace

Stage3Result stage3_scale(const SubstepObjective& objective, const Vector& lambda_star,
                          double phi_star, double tol) {
  const auto g = [&](double s) { return objective.value_scaled(lambda_star, s) - phi_star; };
  const double g0 = g(0.0);
  if (g0 <= 0.0) return {0.0, true};
  const double g1 = g(1.0);
  if (g1 >= 0.0) return {1.0, true};
  try {
    return {brent_root(g, 0.0, 1.0, tol), true};
  } catch (const BracketError&) {
  }
  try {
    return {brent_root(g, -0.5, 1.5, tol), true};
  } catch (const BracketError&) {
  }
  return {std::abs(g0) <= std::abs(g1) ? 0.0 : 1.0, false};
}

AssimilationReport nudge_assimilate(WeightedEnsemble& ens, const Observation& y, int n_substeps,
                                    const FilterContext& ctx, const NudgeOptions& opt) {
  const Model& model = *ctx.model;
  AssimilationReport report;
  begin_window(ens, model, n_substeps);
  const auto np = ens.size();
  std::vector<NudgeSlot> slots(np);
  for (std::size_t i = 0; i < np; ++i) slots[i].x_before = ens.particles[i].x_start.dof;

  for (int n = 1; n <= n_substeps; ++n) {
    // Stage 1: uncover dW_n and bound Phi-hat per particle.
    parallel_for(np, ctx.workers, [&](std::size_t i) {
      NudgeSlot& slot = slots[i];
      Particle& p = ens.particles[i];
      if (!slot.valid) return;
      RngStream stream(StreamKey{ctx.master_seed, i, static_cast<std::uint64_t>(ctx.window_index),
                                 static_cast<std::uint64_t>(n), 0, Purpose::model_noise});
      p.noise.dW.row(n - 1) = sample_brownian(stream, model.noise_dim(), model.dt()).transpose();
      slot.stage1_failed = false;
      try {
        slot.objective.emplace(model, slot.x_before, p.noise, p.control, y, n);
        stage1(slot, opt);
      } catch (const PropagationError&) {
        slot.valid = false;
      }
    });

    // Stage 2: couple the particles through the ESS functional.
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < np; ++i) {
      if (slots[i].valid) active.push_back(i);
      report.stage1_failures += slots[i].valid && slots[i].stage1_failed ? 1 : 0;
    }
    if (active.empty()) break;
    PhiBounds bounds{Vector(static_cast<Eigen::Index>(active.size())),
                     Vector(static_cast<Eigen::Index>(active.size()))};
    for (std::size_t k = 0; k < active.size(); ++k) {
      bounds.phi_min[static_cast<Eigen::Index>(k)] = slots[active[k]].phi_min;
      bounds.phi_max[static_cast<Eigen::Index>(k)] = slots[active[k]].phi_max;
    }
    const Stage2Result s2 = stage2_solve(bounds, opt.sigma, opt.stage2_tol, opt.stage2_max_iter);
    if (s2.status != OptimStatus::converged) ++report.stage2_failures;

    // Stage 3: recover the control scale and advance the cached state.
    parallel_for(active.size(), ctx.workers, [&](std::size_t k) {
      const std::size_t i = active[k];
      NudgeSlot& slot = slots[i];
      Particle& p = ens.particles[i];
      slot.stage3_failed = false;
      try {
        const Stage3Result s3 = stage3_scale(*slot.objective, slot.lambda_star,
                                             s2.phi_star[static_cast<Eigen::Index>(k)], opt.stage3_tol);
        slot.stage3_failed = !s3.ok;
        p.control.dLambda.row(n - 1) = (s3.s * slot.lambda_star).transpose();
        slot.x_before = model.step(slot.x_before, effective_increment(p.noise, p.control, n));
      } catch (const PropagationError&) {
        slot.valid = false;
      }
      slot.objective.reset();
    });
    for (std::size_t i : active) report.stage3_failures += slots[i].stage3_failed ? 1 : 0;
  }

  for (std::size_t i = 0; i < np; ++i) {
    Particle& p = ens.particles[i];
    const NudgeSlot& slot = slots[i];
    if (slot.valid) {
      p.x_end = ModelState{slot.x_before, p.x_start.time_index + n_substeps};
      p.end_valid = true;
      const double phi = neg_log_likelihood(model.observe(p.x_end.dof), y.y, y.obs_variance);
      p.log_weight_increment = girsanov_log_weight(phi, girsanov_penalty(p.control, p.noise, p.noise.dt));
    } else {
      p.x_end = p.x_start;
      p.end_valid = false;
      p.log_weight_increment = -std::numeric_limits<double>::infinity();
      ++report.propagation_failures;
    }
    ens.log_weights[static_cast<Eigen::Index>(i)] += p.log_weight_increment;
  }

  weigh_and_resample(ens, ctx, 0, report);

  if (opt.n_jitter > 0) {
    const JitterOptions jopt{1.0, opt.delta, opt.n_jitter, true};
    std::vector<JitterOutcome> outcomes(np);
    parallel_for(np, ctx.workers, [&](std::size_t i) {
      Particle& p = ens.particles[i];
      if (!p.end_valid) return;
      RngStream stream(StreamKey{ctx.master_seed, i, static_cast<std::uint64_t>(ctx.window_index), 0,
                                 0, Purpose::jitter_noise});
      outcomes[i] = mcmc_jitter(p, y, model, jopt, stream);
    });
    for (const auto& o : outcomes) {
      report.jitter_proposals += o.proposals;
      report.jitter_accepts += o.accepted;
    }
  }
  return report;
}

}  // namespace nudgepf
