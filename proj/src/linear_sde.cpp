#include "nudgepf/linear_sde.hpp"

#include <cmath>
#include <stdexcept>

namespace nudgepf {

void LinearSdeParams::validate() const {
  if (!(A > 0.0) || !(D > 0.0) || !(dt > 0.0) || n_steps < 1) {
    throw std::invalid_argument("LinearSdeParams: A, D, dt and n_steps must be positive");
  }
  if (!(A * dt < 2.0)) throw std::invalid_argument("LinearSdeParams: need A*dt < 2");
}

double linear_step(double x, double dW, double lambda, const LinearSdeParams& p) {
  const double half = 0.5 * p.A * p.dt;
  return ((1.0 - half) * x + p.D * (dW + p.dt * lambda)) / (1.0 + half);
}

double stationary_init_sampler(const LinearSdeParams& p, RngStream& stream) {
  p.validate();
  return std::sqrt(p.D * p.D / (2.0 * p.A)) * stream.standard_normal();
}

GaussianMoments exact_gaussian_posterior(double prior_mean, double prior_var, double y,
                                         double obs_var) {
  if (!(prior_var > 0.0) || !(obs_var > 0.0)) {
    throw std::invalid_argument("exact_gaussian_posterior: variances must be positive");
  }
  GaussianMoments post;
  post.var = prior_var * obs_var / (prior_var + obs_var);
  post.mean = post.var * (prior_mean / prior_var + y / obs_var);
  return post;
}

LinearSdeModel::LinearSdeModel(const LinearSdeParams& p) : p_(p) { p_.validate(); }

double LinearSdeModel::decay() const {
  const double half = 0.5 * p_.A * p_.dt;
  return (1.0 - half) / (1.0 + half);
}

Vector LinearSdeModel::step(const Vector& x, const Vector& increment) const {
  Vector out(1);
  out[0] = linear_step(x[0], increment[0], 0.0, p_);
  return out;
}

StepAdjoint LinearSdeModel::step_adjoint(const Vector& /*x*/, const Vector& /*x_next*/,
                                         const Vector& /*increment*/,
                                         const Vector& adj_next) const {
  const double lhs = 1.0 + 0.5 * p_.A * p_.dt;
  StepAdjoint sa;
  sa.state = adj_next * decay();
  sa.increment = adj_next * (p_.D / lhs);
  return sa;
}

}  // namespace nudgepf
