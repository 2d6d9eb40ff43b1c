#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "nudgepf/optimize.hpp"

namespace nudgepf {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;

struct CorrectionPair {
  Vector s;
  Vector y;
  double rho;
};

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Variables sitting on a bound with the gradient pushing outward are held.
Eigen::Array<bool, Eigen::Dynamic, 1> free_set(const Vector& x, const Vector& g,
                                               const Vector& lower, const Vector& upper) {
  Eigen::Array<bool, Eigen::Dynamic, 1> free(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool pinned = lower[i] == upper[i];
    const bool at_lower = x[i] <= lower[i] && g[i] > 0.0;
    const bool at_upper = x[i] >= upper[i] && g[i] < 0.0;
    free[i] = !(pinned || at_lower || at_upper);
  }
  return free;
}

Vector mask(const Vector& v, const Eigen::Array<bool, Eigen::Dynamic, 1>& free) {
  return free.select(v.array(), 0.0).matrix();
}

Vector two_loop(const Vector& g, const std::deque<CorrectionPair>& pairs,
                const Eigen::Array<bool, Eigen::Dynamic, 1>& free) {
  Vector q = mask(g, free);
  std::vector<double> alpha(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * mask(pairs[k].s, free).dot(q);
    q -= alpha[k] * mask(pairs[k].y, free);
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * mask(pairs[k].y, free).dot(q);
    q += (alpha[k] - beta) * mask(pairs[k].s, free);
  }
  return -mask(q, free);
}

}  // namespace

BoxProblem BoxProblem::unbounded(ValueAndGradient f, Vector x0) {
  BoxProblem p;
  const auto n = x0.size();
  p.objective = std::move(f);
  p.lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  p.upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  p.x0 = std::move(x0);
  return p;
}

double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lower,
                               const Vector& upper) {
  if (x.size() == 0) return 0.0;
  return (x - project(x - g, lower, upper)).lpNorm<Eigen::Infinity>();
}

OptimResult lbfgs_minimize(const BoxProblem& problem) {
  const auto n = problem.x0.size();
  if (problem.lower.size() != n || problem.upper.size() != n) {
    throw std::invalid_argument("lbfgs_minimize: bound dimensions do not match x0");
  }
  if ((problem.lower.array() > problem.upper.array()).any()) {
    throw std::invalid_argument("lbfgs_minimize: lower bound exceeds upper bound");
  }
  if (!(problem.tol > 0.0)) throw std::invalid_argument("lbfgs_minimize: tol must be positive");

  OptimResult res;
  res.x = project(problem.x0, problem.lower, problem.upper);
  Vector g(n);
  res.f = problem.objective(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !g.allFinite()) {
    res.status = OptimStatus::line_search_failed;
    res.projected_gradient_norm = std::numeric_limits<double>::infinity();
    return res;
  }

  std::deque<CorrectionPair> pairs;
  Vector g_new(n);
  for (;;) {
    res.projected_gradient_norm = projected_gradient_norm(res.x, g, problem.lower, problem.upper);
    if (res.projected_gradient_norm < problem.tol) {
      res.status = OptimStatus::converged;
      return res;
    }
    if (res.iterations >= problem.max_iter) {
      res.status = OptimStatus::max_iterations;
      return res;
    }

    const auto free = free_set(res.x, g, problem.lower, problem.upper);
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vector d = two_loop(g, pairs, free);
      if (!(g.dot(d) < 0.0)) {
        pairs.clear();
        d = -mask(g, free);
      }
      double step = 1.0;
      if (pairs.empty()) step = std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));
      for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= 0.5) {
        const Vector trial = project(res.x + step * d, problem.lower, problem.upper);
        const Vector s = trial - res.x;
        if (s.lpNorm<Eigen::Infinity>() == 0.0) break;
        const double f_trial = problem.objective(trial, g_new);
        ++res.evaluations;
        if (std::isfinite(f_trial) && g_new.allFinite() && f_trial <= res.f + kArmijo * g.dot(s)) {
          const Vector y = g_new - g;
          const double sy = s.dot(y);
          if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            pairs.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(pairs.size()) > problem.memory) pairs.pop_front();
          }
          res.x = trial;
          res.f = f_trial;
          g = g_new;
          accepted = true;
          break;
        }
      }
      if (!accepted) pairs.clear();
    }
    if (!accepted) {
      res.status = OptimStatus::line_search_failed;
      return res;
    }
    ++res.iterations;
  }
}

}  // namespace nudgepf
