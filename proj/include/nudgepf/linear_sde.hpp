#pragma once

#include "nudgepf/model.hpp"
#include "nudgepf/rng.hpp"

namespace nudgepf {

/// dx = -A x dt + D dW, observed directly (h(x) = x).
struct LinearSdeParams {
  double A = 1.0;
  double D = 1.0;
  double dt = 0.1;
  int n_steps = 10;

  /// Throws std::invalid_argument unless all positive and A*dt < 2.
  void validate() const;
};

/// Midpoint step ((1 - A dt/2) x + D (dW + dt lambda)) / (1 + A dt/2).
double linear_step(double x, double dW, double lambda, const LinearSdeParams& p);

/// Draw from the stationary law N(0, D^2 / (2A)).
double stationary_init_sampler(const LinearSdeParams& p, RngStream& stream);

struct GaussianMoments {
  double mean = 0.0;
  double var = 0.0;
};

/// Conjugate update of a Gaussian prior with one direct observation.
GaussianMoments exact_gaussian_posterior(double prior_mean, double prior_var, double y,
                                         double obs_var);

class LinearSdeModel final : public Model {
 public:
  explicit LinearSdeModel(const LinearSdeParams& p);

  std::string_view name() const override { return "linear_sde"; }
  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index noise_dim() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  double dt() const override { return p_.dt; }

  Vector step(const Vector& x, const Vector& increment) const override;
  StepAdjoint step_adjoint(const Vector& x, const Vector& x_next, const Vector& increment,
                           const Vector& adj_next) const override;
  Vector observe(const Vector& x) const override { return x; }
  Vector observe_adjoint(const Vector& dh) const override { return dh; }

  const LinearSdeParams& params() const { return p_; }

  /// Per-substep contraction (1 - A dt/2) / (1 + A dt/2).
  double decay() const;

 private:
  LinearSdeParams p_;
};

}  // namespace nudgepf
