#include <cmath>
#include <stdexcept>

#include "nudgepf/filters.hpp"

namespace nudgepf {
namespace {

double jitter_energy(const Model& model, const Particle& p, const Vector& x_end,
                     const Observation& y, bool include_penalty) {
  double e = neg_log_likelihood(model.observe(x_end), y.y, y.obs_variance);
  if (include_penalty) e += girsanov_penalty(p.control, p.noise, p.noise.dt);
  return e;
}

}  // namespace

NoiseWindow pcn_propose(const NoiseWindow& w, double delta, const NoiseWindow& xi) {
  if (!(delta > 0.0)) throw std::invalid_argument("pcn_propose: delta must be positive");
  if (w.dW.rows() != xi.dW.rows() || w.dW.cols() != xi.dW.cols()) {
    throw std::invalid_argument("pcn_propose: shape mismatch");
  }
  const double rho = (2.0 - delta) / (2.0 + delta);
  NoiseWindow out = w;
  out.dW = rho * w.dW + std::sqrt(1.0 - rho * rho) * xi.dW;
  return out;
}

JitterOutcome mcmc_jitter(Particle& p, const Observation& y, const Model& model,
                          const JitterOptions& opt, RngStream& stream) {
  if (!p.end_valid) throw std::invalid_argument("mcmc_jitter: particle end state not valid");
  JitterOutcome out;
  double current = jitter_energy(model, p, p.x_end.dof, y, opt.include_penalty);
  for (int k = 0; k < opt.n_steps; ++k) {
    NoiseWindow xi(p.noise.substeps(), p.noise.noise_dim(), p.noise.dt);
    const double sd = std::sqrt(p.noise.dt);
    for (Eigen::Index r = 0; r < xi.dW.rows(); ++r) {
      for (Eigen::Index c = 0; c < xi.dW.cols(); ++c) xi.dW(r, c) = sd * stream.standard_normal();
    }
    const double log_u = std::log(stream.uniform());
    ++out.proposals;

    Particle proposal = p;
    proposal.noise = pcn_propose(p.noise, opt.delta, xi);
    try {
      proposal.x_end = propagate(model, proposal.x_start, proposal.noise, proposal.control);
    } catch (const PropagationError&) {
      continue;
    }
    const double energy = jitter_energy(model, proposal, proposal.x_end.dof, y, opt.include_penalty);
    if (std::isfinite(energy) && log_u < opt.theta * (current - energy)) {
      p.noise = std::move(proposal.noise);
      p.x_end = std::move(proposal.x_end);
      current = energy;
      ++out.accepted;
    }
  }
  out.energy = current;
  return out;
}

}  // namespace nudgepf
