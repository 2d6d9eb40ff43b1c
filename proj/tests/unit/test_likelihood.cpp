#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nudgepf/likelihood.hpp"
#include "nudgepf/linear_sde.hpp"
#include "support.hpp"

using namespace nudgepf;

TEST(NegLogLikelihood, Examples) {
  const Vector y = Vector::Constant(1, 0.3);
  EXPECT_EQ(neg_log_likelihood(y, y, 0.01), 0.0);
  EXPECT_NEAR(neg_log_likelihood(Vector::Constant(1, 0.4), y, 0.01), 0.5, 1e-12);
  const Vector hx = Vector::LinSpaced(4, 0.0, 1.0);
  const Vector yy = Vector::LinSpaced(4, 0.5, -0.5);
  EXPECT_DOUBLE_EQ(neg_log_likelihood(hx, yy, 0.2), 2.0 * neg_log_likelihood(hx, yy, 0.4));
}

TEST(NegLogLikelihood, LengthMismatch) {
  EXPECT_THROW(neg_log_likelihood(Vector::Zero(2), Vector::Zero(3), 1.0), std::invalid_argument);
}

TEST(GirsanovPenalty, Examples) {
  NoiseWindow w(1, 1, 0.1);
  ControlWindow c(1, 1);
  w.dW(0, 0) = 0.2;
  EXPECT_EQ(girsanov_penalty(c, w, 0.1), 0.0);
  c.dLambda(0, 0) = 1.0;
  EXPECT_NEAR(girsanov_penalty(c, w, 0.1), 0.25, 1e-15);
}

TEST(GirsanovPenalty, QuadraticInControlScale) {
  LinearSdeModel model(LinearSdeParams{});
  const NoiseWindow w = test::random_noise(model, 10, 1);
  const ControlWindow c = test::random_control(model, 10, 2);
  const double quad = 0.5 * c.dLambda.squaredNorm() * w.dt;
  const double lin = (c.dLambda.array() * w.dW.array()).sum();
  for (double s : {0.0, 1.0, 2.0}) {
    ControlWindow cs = c;
    cs.dLambda *= s;
    EXPECT_NEAR(girsanov_penalty(cs, w, w.dt), s * s * quad + s * lin, 1e-12);
  }
}

TEST(GirsanovLedger, ContributionsSumToPenalty) {
  LinearSdeModel model(LinearSdeParams{});
  const NoiseWindow w = test::random_noise(model, 10, 3);
  const ControlWindow c = test::random_control(model, 10, 4);
  const auto ledger = girsanov_ledger(c, w, w.dt);
  ASSERT_EQ(ledger.contributions.size(), 10u);
  double sum = 0;
  for (double v : ledger.contributions) sum += v;
  EXPECT_NEAR(sum, ledger.penalty, 1e-14);
  EXPECT_NEAR(ledger.penalty, girsanov_penalty(c, w, w.dt), 1e-14);
}

TEST(GirsanovPenalty, ShapeMismatch) {
  NoiseWindow w(3, 2, 0.1);
  ControlWindow c(3, 1);
  EXPECT_THROW(girsanov_penalty(c, w, 0.1), std::invalid_argument);
}

TEST(GirsanovLogWeight, Examples) {
  EXPECT_EQ(girsanov_log_weight(1.5, 0.0), -1.5);
  EXPECT_EQ(girsanov_log_weight(0.0, 0.25), -0.25);
  EXPECT_DOUBLE_EQ(girsanov_log_weight(1.0, 0.5) + girsanov_log_weight(2.0, -0.25),
                   girsanov_log_weight(3.0, 0.25));
}

// A fixed control shifts the sampled paths; weighting by exp(-penalty) must
// recover the moments of the unshifted law.
TEST(GirsanovConsistency, WeightedMomentsMatchUnperturbed) {
  const LinearSdeParams p{1.0, 1.0, 0.1, 10};
  LinearSdeModel model(p);
  const int n = 10000;
  std::vector<double> x_plain(n), x_nudged(n), logw(n);
  ControlWindow c(p.n_steps, 1);
  c.dLambda.setConstant(0.5);
  for (int i = 0; i < n; ++i) {
    RngStream init(StreamKey{11, static_cast<std::uint64_t>(i), 0, 0, 0, Purpose::initial_condition});
    RngStream noise(StreamKey{11, static_cast<std::uint64_t>(i), 0, 0, 0, Purpose::model_noise});
    RngStream noise2(StreamKey{12, static_cast<std::uint64_t>(i), 0, 0, 0, Purpose::model_noise});
    const ModelState x0{Vector::Constant(1, stationary_init_sampler(p, init)), 0};
    NoiseWindow w(p.n_steps, 1, p.dt), w2(p.n_steps, 1, p.dt);
    for (int k = 0; k < p.n_steps; ++k) {
      w.dW(k, 0) = std::sqrt(p.dt) * noise.standard_normal();
      w2.dW(k, 0) = std::sqrt(p.dt) * noise2.standard_normal();
    }
    x_plain[i] = propagate(model, x0, w2, ControlWindow(p.n_steps, 1)).dof[0];
    x_nudged[i] = propagate(model, x0, w, c).dof[0];
    logw[i] = girsanov_log_weight(0.0, girsanov_penalty(c, w, p.dt));
  }
  double wsum = 0, m1 = 0, m2 = 0;
  std::vector<double> wts(n);
  for (int i = 0; i < n; ++i) {
    wts[i] = std::exp(logw[i]);
    wsum += wts[i];
  }
  for (int i = 0; i < n; ++i) {
    m1 += wts[i] / wsum * x_nudged[i];
    m2 += wts[i] / wsum * x_nudged[i] * x_nudged[i];
  }
  const auto plain = test::moments(x_plain);
  double plain_m2 = 0, plain_m4 = 0;
  for (double x : x_plain) {
    plain_m2 += x * x / n;
    plain_m4 += x * x * x * x / n;
  }
  // Standard errors combine the plain estimate with the weighted one (inflated by 1/ESS).
  double w2sum = 0;
  for (double v : wts) w2sum += (v / wsum) * (v / wsum);
  const double ess = 1.0 / w2sum;
  const double se1 = std::sqrt(plain.var / n + plain.var / ess);
  const double var2 = plain_m4 - plain_m2 * plain_m2;
  const double se2 = std::sqrt(var2 / n + var2 / ess);
  EXPECT_LE(std::abs(m1 - plain.mean), 3 * se1);
  EXPECT_LE(std::abs(m2 - plain_m2), 3 * se2);
  // The nudge must actually move the paths, otherwise the check is vacuous.
  EXPECT_GT(test::moments(x_nudged).mean - plain.mean, 10 * se1);
}
