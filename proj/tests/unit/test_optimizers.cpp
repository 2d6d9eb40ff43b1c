#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "nudgepf/optimize.hpp"

using namespace nudgepf;

namespace {

BoxProblem quadratic_1d(double lo, double hi, double x0) {
  BoxProblem p;
  p.objective = [](const Vector& x, Vector& g) {
    g = 2.0 * (x.array() - 3.0);
    return (x.array() - 3.0).square().sum();
  };
  p.lower = Vector::Constant(1, lo);
  p.upper = Vector::Constant(1, hi);
  p.x0 = Vector::Constant(1, x0);
  return p;
}

double rosenbrock(const Vector& x, Vector& g) {
  const double a = 1 - x[0], b = x[1] - x[0] * x[0];
  g.resize(2);
  g[0] = -2 * a - 400 * x[0] * b;
  g[1] = 200 * b;
  return a * a + 100 * b * b;
}

}  // namespace

TEST(Lbfgs, InteriorQuadratic) {
  const auto r = lbfgs_minimize(quadratic_1d(0, 10, 0));
  EXPECT_EQ(r.status, OptimStatus::converged);
  EXPECT_NEAR(r.x[0], 3.0, 1e-6);
}

TEST(Lbfgs, ActiveBound) {
  const auto r = lbfgs_minimize(quadratic_1d(0, 2, 0));
  EXPECT_EQ(r.x[0], 2.0);
  EXPECT_EQ(r.status, OptimStatus::converged);
}

TEST(Lbfgs, EqualBoundsPinVariable) {
  BoxProblem p;
  p.objective = [](const Vector& x, Vector& g) {
    g = 2.0 * (x.array() - 3.0);
    return (x.array() - 3.0).square().sum();
  };
  p.lower = Vector::Constant(2, 0.0);
  p.upper = Vector::Constant(2, 10.0);
  p.lower[1] = p.upper[1] = 1.0;
  p.x0 = Vector::Constant(2, 1.0);
  const auto r = lbfgs_minimize(p);
  EXPECT_NEAR(r.x[0], 3.0, 1e-6);
  EXPECT_EQ(r.x[1], 1.0);
}

TEST(Lbfgs, RosenbrockUnbounded) {
  Vector x0(2);
  x0 << -1.2, 1.0;
  BoxProblem p = BoxProblem::unbounded(rosenbrock, x0);
  p.tol = 1e-10;
  p.max_iter = 2000;
  const auto r = lbfgs_minimize(p);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(Lbfgs, IteratesStayFeasibleAndMonotone) {
  std::vector<Vector> seen;
  std::vector<double> values;
  BoxProblem p;
  Vector lo(3), hi(3), x0(3);
  lo << -1, 0.5, -2;
  hi << 0.5, 2, 2;
  x0 << 0, 1, 0;
  p.lower = lo;
  p.upper = hi;
  p.x0 = x0;
  p.objective = [&](const Vector& x, Vector& g) {
    seen.push_back(x);
    Vector c(3);
    c << 2, -1, 0.3;
    g = 2.0 * (x - c) + 0.5 * x.array().sin().matrix();
    const double f = (x - c).squaredNorm() - 0.5 * x.array().cos().sum();
    values.push_back(f);
    return f;
  };
  const auto r = lbfgs_minimize(p);
  for (const auto& x : seen) {
    EXPECT_TRUE((x.array() >= lo.array()).all() && (x.array() <= hi.array()).all());
  }
  EXPECT_LE(r.f, values.front());
  EXPECT_LT(r.projected_gradient_norm, 1e-6);
  EXPECT_EQ(r.x[0], 0.5);
  EXPECT_EQ(r.x[1], 0.5);
}

TEST(ProjectedGradient, ZeroAtActiveBounds) {
  Vector x(2), g(2), lo(2), hi(2);
  x << 0, 1;
  g << 1, -1;
  lo << 0, 0;
  hi << 1, 1;
  EXPECT_EQ(projected_gradient_norm(x, g, lo, hi), 0.0);
}

TEST(Brent, Examples) {
  EXPECT_NEAR(brent_root([](double x) { return x; }, -1, 1, 1e-12), 0.0, 1e-12);
  EXPECT_NEAR(brent_root([](double x) { return 2 * x - 1; }, 0, 1, 1e-12), 0.5, 1e-12);
  EXPECT_NEAR(brent_root([](double x) { return x * x - 2; }, 1, 2, 1e-7), std::sqrt(2.0), 1e-7);
}

TEST(Brent, EndpointRoots) {
  EXPECT_EQ(brent_root([](double x) { return x - 1; }, 1, 2, 1e-10), 1.0);
  EXPECT_EQ(brent_root([](double x) { return x - 2; }, 1, 2, 1e-10), 2.0);
}

TEST(Brent, StaysInBracketAndRespectsIterationBound) {
  int calls = 0;
  const auto f = [&](double x) {
    ++calls;
    return std::exp(x) - 5.0 + std::sin(3 * x);
  };
  const double r = brent_root(f, 0.0, 3.0, 1e-10);
  EXPECT_GE(r, 0.0);
  EXPECT_LE(r, 3.0);
  EXPECT_LT(std::abs(f(r)), 1e-8);
  const double bound = std::pow(std::log2(3.0 / 1e-10), 2);
  EXPECT_LE(calls, bound);
}

TEST(Brent, NoSignChange) {
  EXPECT_THROW(brent_root([](double x) { return x * x + 1; }, -1, 1, 1e-8), BracketError);
}
