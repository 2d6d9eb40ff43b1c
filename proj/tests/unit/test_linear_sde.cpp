#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nudgepf/linear_sde.hpp"
#include "support.hpp"

using namespace nudgepf;

TEST(LinearStep, FormulaExamples) {
  const LinearSdeParams p{1.0, 1.0, 0.1, 10};
  EXPECT_NEAR(linear_step(1.0, 0.0, 0.0, p), 0.95 / 1.05, 1e-15);
  EXPECT_EQ(linear_step(0.0, 0.0, 0.0, p), 0.0);
  EXPECT_NEAR(linear_step(0.0, 0.2, 1.0, p), 0.3 / 1.05, 1e-15);
}

TEST(LinearStep, ModelMatchesFreeFunction) {
  const LinearSdeParams p{0.7, 1.3, 0.1, 10};
  LinearSdeModel model(p);
  const Vector x = Vector::Constant(1, 0.4);
  const Vector inc = Vector::Constant(1, 0.25);
  EXPECT_DOUBLE_EQ(model.step(x, inc)[0], linear_step(0.4, 0.25, 0.0, p));
  EXPECT_DOUBLE_EQ(model.decay(), (1 - 0.035) / (1 + 0.035));
}

TEST(LinearSdeParams, Validation) {
  EXPECT_NO_THROW((LinearSdeParams{1.0, 1.0, 0.1, 10}.validate()));
  EXPECT_THROW((LinearSdeParams{1.0, 0.0, 0.1, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((LinearSdeParams{-1.0, 1.0, 0.1, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((LinearSdeParams{1.0, 1.0, 2.0, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((LinearSdeParams{1.0, 1.0, 0.1, 0}.validate()), std::invalid_argument);
}

TEST(StationaryInit, Moments) {
  const LinearSdeParams p{1.0, 1.0, 0.1, 10};
  RngStream s(StreamKey{3, 0, 0, 0, 0, Purpose::initial_condition});
  std::vector<double> xs(100000);
  for (auto& x : xs) x = stationary_init_sampler(p, s);
  const auto m = test::moments(xs);
  EXPECT_GE(m.var, 0.47);
  EXPECT_LE(m.var, 0.53);
  EXPECT_LE(std::abs(m.mean), 0.01);
}

TEST(StationaryInit, DiscreteChainKeepsStationaryVariance) {
  const LinearSdeParams p{1.0, 1.0, 0.1, 10};
  const int n_paths = 100000;
  RngStream s(StreamKey{4, 0, 0, 0, 0, Purpose::initial_condition});
  std::vector<double> xs(n_paths);
  for (auto& x : xs) {
    x = stationary_init_sampler(p, s);
    for (int n = 0; n < p.n_steps; ++n) x = linear_step(x, std::sqrt(p.dt) * s.standard_normal(), 0.0, p);
  }
  const auto m = test::moments(xs);
  const double se = 0.5 * std::sqrt(2.0 / n_paths);
  EXPECT_LE(std::abs(m.var - 0.5), 3 * se);
  EXPECT_LE(std::abs(m.mean), 3 * std::sqrt(0.5 / n_paths));
}

TEST(ExactPosterior, TableValues) {
  const auto post = exact_gaussian_posterior(0.0, 0.5, -0.055634, 0.01);
  EXPECT_NEAR(post.mean, -0.054543, 5e-6);
  EXPECT_NEAR(post.var, 0.009804, 5e-6);
}

TEST(ExactPosterior, UninformativeObservation) {
  const auto post = exact_gaussian_posterior(0.3, 0.5, 10.0, 1e9);
  EXPECT_NEAR(post.mean, 0.3, 1e-6);
  EXPECT_NEAR(post.var, 0.5, 1e-6);
}

TEST(ExactPosterior, RejectsNonPositiveVariances) {
  EXPECT_THROW(exact_gaussian_posterior(0.0, 0.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(exact_gaussian_posterior(0.0, 1.0, 1.0, 0.0), std::invalid_argument);
}
