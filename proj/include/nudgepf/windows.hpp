#pragma once

#include <Eigen/Dense>

namespace nudgepf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Model degrees of freedom at one instant.
struct ModelState {
  Vector dof;
  int time_index = 0;
};

/// Brownian increments for one assimilation window: row n-1 drives substep n.
/// Rows for substeps not yet sampled stay exactly zero.
struct NoiseWindow {
  Matrix dW;
  double dt = 0.0;

  NoiseWindow() = default;
  NoiseWindow(Eigen::Index n_substeps, Eigen::Index n_noise, double step)
      : dW(Matrix::Zero(n_substeps, n_noise)), dt(step) {}

  Eigen::Index substeps() const { return dW.rows(); }
  Eigen::Index noise_dim() const { return dW.cols(); }
};

/// Piecewise-constant control, one row per substep, same shape as the noise.
struct ControlWindow {
  Matrix dLambda;

  ControlWindow() = default;
  ControlWindow(Eigen::Index n_substeps, Eigen::Index n_noise)
      : dLambda(Matrix::Zero(n_substeps, n_noise)) {}

  Eigen::Index substeps() const { return dLambda.rows(); }
  Eigen::Index noise_dim() const { return dLambda.cols(); }
};

/// One observation vector with iid Gaussian errors of variance obs_variance.
struct Observation {
  Vector y;
  int window_index = 0;
  double obs_variance = 1.0;
};

}  // namespace nudgepf
