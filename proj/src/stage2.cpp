#include <cmath>
#include <stdexcept>
#include <vector>

#include "nudgepf/filters.hpp"

namespace nudgepf {

double stage2_objective(const Vector& phi, double sigma, Vector& grad) {
  const double shift = phi.minCoeff();
  const Eigen::ArrayXd e = (-(phi.array() - shift)).exp();
  const double s1 = e.sum();
  const double s2 = e.square().sum();
  const double r = s1 / s2;
  grad = (sigma + 2.0 * r * e - 2.0 * r * r * e.square()).matrix();
  return sigma * phi.sum() - s1 * r;
}

double stage2_objective(const Vector& phi, double sigma) {
  Vector unused;
  return stage2_objective(phi, sigma, unused);
}

Stage2Result stage2_solve(const PhiBounds& bounds, double sigma, double tol, int max_iter) {
  if (!(sigma > 0.0)) throw std::invalid_argument("stage2_solve: sigma must be positive");
  if (bounds.phi_min.size() != bounds.phi_max.size()) {
    throw std::invalid_argument("stage2_solve: bound sizes differ");
  }
  if ((bounds.phi_min.array() > bounds.phi_max.array()).any()) {
    throw std::invalid_argument("stage2_solve: phi_min exceeds phi_max");
  }
  const Vector& lo = bounds.phi_min;
  const Vector& hi = bounds.phi_max;

  // Second start: every phi clamped to one common level, the level scanned
  // over all bound values. Equal phi gives the largest ESS, so this start sits
  // in the right basin when phi_min alone is a degenerate local minimum.
  Vector level_start = lo;
  double level_value = stage2_objective(lo, sigma);
  std::vector<double> levels(lo.data(), lo.data() + lo.size());
  levels.insert(levels.end(), hi.data(), hi.data() + hi.size());
  for (double c : levels) {
    const Vector phi = lo.cwiseMax(Vector::Constant(lo.size(), c)).cwiseMin(hi);
    const double v = stage2_objective(phi, sigma);
    if (v < level_value) {
      level_value = v;
      level_start = phi;
    }
  }

  BoxProblem problem;
  problem.objective = [sigma](const Vector& phi, Vector& grad) {
    return stage2_objective(phi, sigma, grad);
  };
  problem.lower = bounds.phi_min;
  problem.upper = bounds.phi_max;
  problem.x0 = bounds.phi_min;
  problem.tol = tol;
  problem.max_iter = max_iter;
  OptimResult res = lbfgs_minimize(problem);
  if (level_start != lo) {
    problem.x0 = level_start;
    OptimResult alt = lbfgs_minimize(problem);
    if (alt.f < res.f) res = std::move(alt);
  }
  return Stage2Result{res.x, res.f, res.status};
}

}  // namespace nudgepf
