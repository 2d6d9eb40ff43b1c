#pragma once

#include <functional>
#include <stdexcept>

#include "nudgepf/windows.hpp"

namespace nudgepf {

/// Returns f(x) and writes the gradient into grad.
using ValueAndGradient = std::function<double(const Vector& x, Vector& grad)>;

/// Box-constrained smooth minimisation problem. Bounds may be +/-infinity;
/// lower == upper pins a variable.
struct BoxProblem {
  ValueAndGradient objective;
  Vector lower;
  Vector upper;
  Vector x0;
  double tol = 1e-6;
  int max_iter = 500;
  int memory = 10;

  /// Unbounded problem of the given start point.
  static BoxProblem unbounded(ValueAndGradient f, Vector x0);
};

enum class OptimStatus { converged, max_iterations, line_search_failed };

struct OptimResult {
  Vector x;
  double f = 0.0;
  OptimStatus status = OptimStatus::max_iterations;
  int iterations = 0;
  int evaluations = 0;
  double projected_gradient_norm = 0.0;
};

/// Limited-memory quasi-Newton with gradient projection for the box: the
/// two-loop direction is computed on the free variables and a backtracking
/// Armijo search runs along the projected path. Every iterate is feasible
/// and accepted objective values never increase.
OptimResult lbfgs_minimize(const BoxProblem& problem);

/// Infinity norm of x - P(x - g).
double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower,
                               const Vector& upper);

class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Brent's method (bisection, secant and inverse quadratic interpolation).
/// Requires f(a) f(b) <= 0; the result always lies in [min(a,b), max(a,b)].
double brent_root(const std::function<double(double)>& f, double a, double b, double tol,
                  int max_iter = 200);

}  // namespace nudgepf
