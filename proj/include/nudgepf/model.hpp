#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nudgepf/likelihood.hpp"
#include "nudgepf/windows.hpp"

namespace nudgepf {

/// Raised when a substep cannot be completed (e.g. Newton failure).
class PropagationError : public std::runtime_error {
 public:
  PropagationError(const std::string& what, int substep)
      : std::runtime_error(what), substep_(substep) {}
  int substep() const { return substep_; }

 private:
  int substep_;
};

/// Raised when the linearised system of a substep cannot be transposed-solved.
class GradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reverse-mode sensitivities of one substep.
struct StepAdjoint {
  Vector state;      // d(.)/d x_n
  Vector increment;  // d(.)/d (dW_n + lambda_n dt)
};

/// Forward model driven by additive noise.
///
/// A substep consumes only the effective increment dW + lambda*dt, so a
/// Girsanov control enters every model identically.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view name() const = 0;
  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index noise_dim() const = 0;
  virtual Eigen::Index obs_dim() const = 0;
  virtual double dt() const = 0;

  /// One substep. Throws PropagationError (substep index 0) on failure.
  virtual Vector step(const Vector& x, const Vector& increment) const = 0;

  /// Transposed linearisation of `step` at (x, increment) with result x_next,
  /// applied to the adjoint of x_next.
  virtual StepAdjoint step_adjoint(const Vector& x, const Vector& x_next,
                                   const Vector& increment, const Vector& adj_next) const = 0;

  /// Observation operator h (linear for both bundled models) and its transpose.
  virtual Vector observe(const Vector& x) const = 0;
  virtual Vector observe_adjoint(const Vector& dh) const = 0;
};

/// Effective increment of substep n (1-based): dW_n + lambda_n dt.
Vector effective_increment(const NoiseWindow& w, const ControlWindow& c, int n);

/// All states x_0 .. x_{N_s} of one window.
std::vector<Vector> propagate_trajectory(const Model& model, const Vector& x0,
                                         const NoiseWindow& w, const ControlWindow& c);

ModelState propagate(const Model& model, const ModelState& x0, const NoiseWindow& w,
                     const ControlWindow& c);

/// Phi(propagate(x0, w, c), y) + girsanov_penalty(c, w, dt).
double phi_hat_of_window(const Model& model, const ModelState& x0, const NoiseWindow& w,
                         const ControlWindow& c, const Observation& y);

/// Gradient of phi_hat_of_window with respect to control row n (1-based),
/// by a forward sweep followed by the discrete adjoint sweep.
Vector grad_phi_hat(const Model& model, const ModelState& x0, const NoiseWindow& w,
                    const ControlWindow& c, const Observation& y, int n);

/// Gradient with respect to every control row at once (N_s x N_noise).
Matrix grad_phi_hat_all(const Model& model, const ModelState& x0, const NoiseWindow& w,
                        const ControlWindow& c, const Observation& y);

/// Phi-hat as a function of the control row of one substep, everything else
/// frozen. The state entering substep n is cached, so evaluations only run
/// substeps n .. N_s.
class SubstepObjective {
 public:
  /// `x_before` is the state at the start of substep n (1-based).
  SubstepObjective(const Model& model, Vector x_before, NoiseWindow w, ControlWindow c,
                   Observation y, int n);

  double value(const Vector& row) const;
  double value_and_gradient(const Vector& row, Vector& grad) const;

  /// Value with row n set to s * row.
  double value_scaled(const Vector& row, double s) const { return value(s * row); }

  /// Penalty of rows other than n (constant for this objective).
  double fixed_penalty() const { return fixed_penalty_; }
  const Vector& row() const { return row_; }
  int substep() const { return n_; }

  /// End-of-window state for a given row.
  Vector end_state(const Vector& row) const;

 private:
  double row_penalty(const Vector& row) const;

  const Model* model_;
  Vector x_before_;
  NoiseWindow w_;
  ControlWindow c_;
  Observation y_;
  int n_;
  Vector row_;
  double fixed_penalty_ = 0.0;
};

}  // namespace nudgepf
