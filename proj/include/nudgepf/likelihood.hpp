#pragma once

#include <vector>

#include "nudgepf/windows.hpp"

namespace nudgepf {

/// Gaussian negative log-likelihood with covariance R*I, constants dropped:
/// sum_m (h_x[m] - y[m])^2 / (2R).
double neg_log_likelihood(const Vector& h_x, const Vector& y, double obs_variance);

/// Per-substep Girsanov cost of a control window.
struct GirsanovLedger {
  double penalty = 0.0;
  std::vector<double> contributions;
};

/// Discrete Girsanov penalty sum_n (0.5 |c_n|^2 dt + c_n . dW_n).
///
/// With this sign the weight exp(-penalty) is the likelihood ratio of the
/// unperturbed increment law over the shifted one, evaluated on the
/// effective increments dW_n + c_n dt.
double girsanov_penalty(const ControlWindow& c, const NoiseWindow& w, double dt);
GirsanovLedger girsanov_ledger(const ControlWindow& c, const NoiseWindow& w, double dt);

/// Log-weight increment -(phi + penalty).
inline double girsanov_log_weight(double phi, double penalty) { return -(phi + penalty); }

}  // namespace nudgepf
