#include "nudgepf/model.hpp"

#include <utility>

namespace nudgepf {
namespace {

void check_shapes(const Model& model, const NoiseWindow& w, const ControlWindow& c) {
  if (w.dW.rows() != c.dLambda.rows() || w.dW.cols() != c.dLambda.cols()) {
    throw std::invalid_argument("noise and control windows differ in shape");
  }
  if (w.dW.cols() != model.noise_dim()) {
    throw std::invalid_argument("noise window width does not match the model");
  }
}

Vector step_at(const Model& model, const Vector& x, const Vector& increment, int n) {
  try {
    return model.step(x, increment);
  } catch (const PropagationError& e) {
    throw PropagationError(e.what(), n);
  }
}

Vector obs_adjoint(const Model& model, const Vector& x_end, const Observation& y) {
  return model.observe_adjoint((model.observe(x_end) - y.y) / y.obs_variance);
}

double phi(const Model& model, const Vector& x_end, const Observation& y) {
  return neg_log_likelihood(model.observe(x_end), y.y, y.obs_variance);
}

}  // namespace

Vector effective_increment(const NoiseWindow& w, const ControlWindow& c, int n) {
  return (w.dW.row(n - 1) + c.dLambda.row(n - 1) * w.dt).transpose();
}

std::vector<Vector> propagate_trajectory(const Model& model, const Vector& x0,
                                         const NoiseWindow& w, const ControlWindow& c) {
  check_shapes(model, w, c);
  const int n_steps = static_cast<int>(w.substeps());
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(n_steps) + 1);
  states.push_back(x0);
  for (int n = 1; n <= n_steps; ++n) {
    states.push_back(step_at(model, states.back(), effective_increment(w, c, n), n));
  }
  return states;
}

ModelState propagate(const Model& model, const ModelState& x0, const NoiseWindow& w,
                     const ControlWindow& c) {
  auto states = propagate_trajectory(model, x0.dof, w, c);
  return ModelState{std::move(states.back()), x0.time_index + static_cast<int>(w.substeps())};
}

double phi_hat_of_window(const Model& model, const ModelState& x0, const NoiseWindow& w,
                         const ControlWindow& c, const Observation& y) {
  const ModelState x_end = propagate(model, x0, w, c);
  return phi(model, x_end.dof, y) + girsanov_penalty(c, w, w.dt);
}

Matrix grad_phi_hat_all(const Model& model, const ModelState& x0, const NoiseWindow& w,
                        const ControlWindow& c, const Observation& y) {
  const auto states = propagate_trajectory(model, x0.dof, w, c);
  const int n_steps = static_cast<int>(w.substeps());
  Matrix grad(w.substeps(), w.noise_dim());
  Vector adj = obs_adjoint(model, states.back(), y);
  for (int n = n_steps; n >= 1; --n) {
    const auto sn = static_cast<std::size_t>(n);
    const StepAdjoint sa =
        model.step_adjoint(states[sn - 1], states[sn], effective_increment(w, c, n), adj);
    grad.row(n - 1) = (sa.increment * w.dt).transpose() + c.dLambda.row(n - 1) * w.dt +
                      w.dW.row(n - 1);
    adj = sa.state;
  }
  return grad;
}

Vector grad_phi_hat(const Model& model, const ModelState& x0, const NoiseWindow& w,
                    const ControlWindow& c, const Observation& y, int n) {
  if (n < 1 || n > w.substeps()) throw std::out_of_range("grad_phi_hat: substep out of range");
  const auto states = propagate_trajectory(model, x0.dof, w, c);
  Vector adj = obs_adjoint(model, states.back(), y);
  for (int m = static_cast<int>(w.substeps()); m >= n; --m) {
    const auto sm = static_cast<std::size_t>(m);
    const StepAdjoint sa =
        model.step_adjoint(states[sm - 1], states[sm], effective_increment(w, c, m), adj);
    if (m == n) {
      return sa.increment * w.dt + (c.dLambda.row(n - 1) * w.dt + w.dW.row(n - 1)).transpose();
    }
    adj = sa.state;
  }
  return {};  // unreachable
}

SubstepObjective::SubstepObjective(const Model& model, Vector x_before, NoiseWindow w,
                                   ControlWindow c, Observation y, int n)
    : model_(&model),
      x_before_(std::move(x_before)),
      w_(std::move(w)),
      c_(std::move(c)),
      y_(std::move(y)),
      n_(n) {
  check_shapes(model, w_, c_);
  if (n_ < 1 || n_ > w_.substeps()) throw std::out_of_range("SubstepObjective: bad substep");
  row_ = c_.dLambda.row(n_ - 1).transpose();
  const auto ledger = girsanov_ledger(c_, w_, w_.dt);
  fixed_penalty_ = ledger.penalty - ledger.contributions[static_cast<std::size_t>(n_ - 1)];
}

double SubstepObjective::row_penalty(const Vector& row) const {
  return 0.5 * row.squaredNorm() * w_.dt + row.dot(w_.dW.row(n_ - 1).transpose());
}

Vector SubstepObjective::end_state(const Vector& row) const {
  Vector x = x_before_;
  const int n_steps = static_cast<int>(w_.substeps());
  x = step_at(*model_, x, w_.dW.row(n_ - 1).transpose() + row * w_.dt, n_);
  for (int m = n_ + 1; m <= n_steps; ++m) x = step_at(*model_, x, effective_increment(w_, c_, m), m);
  return x;
}

double SubstepObjective::value(const Vector& row) const {
  return phi(*model_, end_state(row), y_) + fixed_penalty_ + row_penalty(row);
}

double SubstepObjective::value_and_gradient(const Vector& row, Vector& grad) const {
  const int n_steps = static_cast<int>(w_.substeps());
  std::vector<Vector> states;
  std::vector<Vector> increments;
  states.reserve(static_cast<std::size_t>(n_steps - n_ + 2));
  states.push_back(x_before_);
  for (int m = n_; m <= n_steps; ++m) {
    increments.push_back(m == n_ ? Vector(w_.dW.row(n_ - 1).transpose() + row * w_.dt)
                                 : effective_increment(w_, c_, m));
    states.push_back(step_at(*model_, states.back(), increments.back(), m));
  }
  const double value = phi(*model_, states.back(), y_) + fixed_penalty_ + row_penalty(row);

  Vector adj = obs_adjoint(*model_, states.back(), y_);
  for (auto k = increments.size(); k-- > 0;) {
    const StepAdjoint sa = model_->step_adjoint(states[k], states[k + 1], increments[k], adj);
    if (k == 0) {
      grad = sa.increment * w_.dt + row * w_.dt + w_.dW.row(n_ - 1).transpose();
    }
    adj = sa.state;
  }
  return value;
}

}  // namespace nudgepf
