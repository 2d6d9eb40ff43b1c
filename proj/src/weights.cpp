#include "nudgepf/weights.hpp"

#include <cmath>
#include <limits>

namespace nudgepf {

Vector normalize_log_weights(const Vector& log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isfinite(lw) && lw > max_lw) max_lw = lw;
  }
  if (!std::isfinite(max_lw)) throw DegenerateWeightsError("all log-weights are -inf or NaN");
  Vector w(log_weights.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double lw = log_weights[i];
    w[i] = std::isnan(lw) ? 0.0 : std::exp(lw - max_lw);
  }
  return w / w.sum();
}

double ess(const Vector& weights) { return 1.0 / weights.squaredNorm(); }

double ess_from_phi(const Vector& phi) {
  const double shift = phi.minCoeff();
  const Vector e = (-(phi.array() - shift)).exp().matrix();
  const double s1 = e.sum();
  return s1 * s1 / e.squaredNorm();
}

std::vector<int> systematic_resample(const Vector& weights, double u) {
  const auto n = weights.size();
  if (n == 0) return {};
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("systematic_resample: weights must be normalised");
  }
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("systematic_resample: u must be in [0, 1)");
  std::vector<int> parents(static_cast<std::size_t>(n));
  // Positions are scaled by the actual sum so rounding never walks past the
  // last particle with positive weight.
  const double total = weights.sum();
  Eigen::Index last_positive = n - 1;
  while (last_positive > 0 && weights[last_positive] == 0.0) --last_positive;
  double cumulative = weights[0];
  Eigen::Index i = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double position = total * (u + static_cast<double>(j)) / static_cast<double>(n);
    while (position >= cumulative && i < last_positive) {
      ++i;
      cumulative += weights[i];
    }
    parents[static_cast<std::size_t>(j)] = static_cast<int>(i);
  }
  return parents;
}

}  // namespace nudgepf
