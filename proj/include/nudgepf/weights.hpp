#pragma once

#include <stdexcept>
#include <vector>

#include "nudgepf/windows.hpp"

namespace nudgepf {

class DegenerateWeightsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// exp(lw - max) / sum; stable for very negative entries.
/// Throws DegenerateWeightsError if no entry is finite.
Vector normalize_log_weights(const Vector& log_weights);

/// 1 / sum w_i^2 for normalised weights.
double ess(const Vector& weights);

/// ESS of the weights exp(-phi_i), computed after shifting by min(phi).
double ess_from_phi(const Vector& phi);

/// Systematic resampling with offset u in [0, 1). Returns sorted parent indices.
/// Throws std::invalid_argument if the weights do not sum to one.
std::vector<int> systematic_resample(const Vector& weights, double u);

}  // namespace nudgepf
