#include "nudgepf/likelihood.hpp"

#include <stdexcept>

namespace nudgepf {

double neg_log_likelihood(const Vector& h_x, const Vector& y, double obs_variance) {
  if (h_x.size() != y.size()) {
    throw std::invalid_argument("neg_log_likelihood: length mismatch");
  }
  if (!(obs_variance > 0.0)) {
    throw std::invalid_argument("neg_log_likelihood: obs_variance must be positive");
  }
  return (h_x - y).squaredNorm() / (2.0 * obs_variance);
}

GirsanovLedger girsanov_ledger(const ControlWindow& c, const NoiseWindow& w, double dt) {
  if (c.dLambda.rows() != w.dW.rows() || c.dLambda.cols() != w.dW.cols()) {
    throw std::invalid_argument("girsanov_penalty: control and noise shapes differ");
  }
  GirsanovLedger ledger;
  ledger.contributions.resize(static_cast<std::size_t>(c.dLambda.rows()));
  for (Eigen::Index n = 0; n < c.dLambda.rows(); ++n) {
    const auto lam = c.dLambda.row(n);
    const double term = 0.5 * lam.squaredNorm() * dt + lam.dot(w.dW.row(n));
    ledger.contributions[static_cast<std::size_t>(n)] = term;
    ledger.penalty += term;
  }
  return ledger;
}

double girsanov_penalty(const ControlWindow& c, const NoiseWindow& w, double dt) {
  return girsanov_ledger(c, w, dt).penalty;
}

}  // namespace nudgepf
