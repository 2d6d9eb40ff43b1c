#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "nudgepf/likelihood.hpp"
#include "nudgepf/linear_sde.hpp"
#include "nudgepf/sks.hpp"
#include "support.hpp"

using namespace nudgepf;

namespace {

const LinearSdeParams kLinear{1.0, 1.0, 0.1, 10};

SksParams small_sks(int cells) {
  SksParams p;
  p.n_cells = cells;
  return p;
}

ModelState sks_start(const SksModel& model) {
  return ModelState{interpolate(model.mesh(), [](double x) { return 0.8 * std::sin(M_PI * x / 2) + 0.3; }), 0};
}

double fd_row(const Model& model, const ModelState& x0, const NoiseWindow& w, ControlWindow c,
              const Observation& y, int n, int j, double eps) {
  const double base = c.dLambda(n - 1, j);
  c.dLambda(n - 1, j) = base + eps;
  const double fp = phi_hat_of_window(model, x0, w, c, y);
  c.dLambda(n - 1, j) = base - eps;
  const double fm = phi_hat_of_window(model, x0, w, c, y);
  return (fp - fm) / (2 * eps);
}

}  // namespace

TEST(Propagate, LinearZeroNoiseExample) {
  LinearSdeModel model(LinearSdeParams{1.0, 1.0, 0.1, 2});
  const ModelState x0{Vector::Constant(1, 1.0), 0};
  const auto x = propagate(model, x0, NoiseWindow(2, 1, 0.1), ControlWindow(2, 1));
  EXPECT_NEAR(x.dof[0], std::pow(0.95 / 1.05, 2), 1e-15);
  EXPECT_NEAR(x.dof[0], 0.818594, 1e-6);
  EXPECT_EQ(x.time_index, 2);
}

TEST(Propagate, EqualsComposedSteps) {
  LinearSdeModel lin(kLinear);
  SksModel sks(small_sks(8));
  for (const Model* model : {static_cast<const Model*>(&lin), static_cast<const Model*>(&sks)}) {
    const int ns = 5;
    const NoiseWindow w = test::random_noise(*model, ns, 1);
    const ControlWindow c = test::random_control(*model, ns, 2);
    const ModelState x0{model == &lin ? Vector::Constant(1, 0.7) : sks_start(sks).dof, 0};
    Vector x = x0.dof;
    for (int n = 1; n <= ns; ++n) x = model->step(x, effective_increment(w, c, n));
    EXPECT_EQ(propagate(*model, x0, w, c).dof, x);
    const auto traj = propagate_trajectory(*model, x0.dof, w, c);
    ASSERT_EQ(traj.size(), static_cast<std::size_t>(ns + 1));
    EXPECT_EQ(traj.back(), x);
  }
}

TEST(Propagate, ControlNoiseEquivalence) {
  LinearSdeModel lin(kLinear);
  SksModel sks(small_sks(8));
  for (const Model* model : {static_cast<const Model*>(&lin), static_cast<const Model*>(&sks)}) {
    const int ns = 4;
    const NoiseWindow w = test::random_noise(*model, ns, 3);
    const ControlWindow c = test::random_control(*model, ns, 4);
    NoiseWindow shifted = w;
    shifted.dW += c.dLambda * w.dt;
    const ModelState x0{model == &lin ? Vector::Constant(1, -0.2) : sks_start(sks).dof, 0};
    const Vector a = propagate(*model, x0, w, c).dof;
    const Vector b = propagate(*model, x0, shifted, ControlWindow(ns, model->noise_dim())).dof;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Propagate, ShapeMismatchThrows) {
  LinearSdeModel model(kLinear);
  EXPECT_THROW(propagate(model, ModelState{Vector::Zero(1), 0}, NoiseWindow(3, 1, 0.1), ControlWindow(2, 1)),
               std::invalid_argument);
}

TEST(PhiHat, ZeroControlIsPlainPhi) {
  LinearSdeModel model(kLinear);
  const NoiseWindow w = test::random_noise(model, 10, 5);
  const ModelState x0{Vector::Constant(1, 0.3), 0};
  const auto y = test::make_obs(Vector::Constant(1, -0.05), 0.01);
  const double phi = neg_log_likelihood(propagate(model, x0, w, ControlWindow(10, 1)).dof, y.y, 0.01);
  EXPECT_EQ(phi_hat_of_window(model, x0, w, ControlWindow(10, 1), y), phi);
}

TEST(PhiHat, HandTrace) {
  LinearSdeModel model(LinearSdeParams{1.0, 1.0, 0.1, 2});
  NoiseWindow w(2, 1, 0.1);
  ControlWindow c(2, 1);
  w.dW << 0.1, -0.2;
  c.dLambda << 1.0, 0.5;
  // x1 = (0.95*0.5 + 0.1 + 0.1)/1.05, x2 = (0.95*x1 - 0.2 + 0.05)/1.05
  const double x1 = (0.95 * 0.5 + 0.2) / 1.05;
  const double x2 = (0.95 * x1 - 0.15) / 1.05;
  const double phi = (x2 - 0.2) * (x2 - 0.2) / (2 * 0.01);
  const double pen = (0.5 * 1.0 * 0.1 + 1.0 * 0.1) + (0.5 * 0.25 * 0.1 + 0.5 * -0.2);
  const auto y = test::make_obs(Vector::Constant(1, 0.2), 0.01);
  EXPECT_NEAR(phi_hat_of_window(model, ModelState{Vector::Constant(1, 0.5), 0}, w, c, y), phi + pen, 1e-12);
}

TEST(PhiHat, ContinuousInControlEntry) {
  LinearSdeModel model(kLinear);
  const NoiseWindow w = test::random_noise(model, 10, 6);
  ControlWindow c = test::random_control(model, 10, 7);
  const ModelState x0{Vector::Constant(1, 0.3), 0};
  const auto y = test::make_obs(Vector::Constant(1, 0.1), 0.01);
  double prev = phi_hat_of_window(model, x0, w, c, y);
  for (int k = 1; k <= 1000; ++k) {
    c.dLambda(4, 0) += 1e-4;
    const double cur = phi_hat_of_window(model, x0, w, c, y);
    EXPECT_LT(std::abs(cur - prev), 1e-2);
    prev = cur;
  }
}

TEST(GradPhiHat, LinearClosedFormAtZeroControl) {
  LinearSdeModel model(kLinear);
  const NoiseWindow w = test::random_noise(model, 10, 8);
  const ControlWindow c(10, 1);
  const ModelState x0{Vector::Constant(1, 0.6), 0};
  const auto y = test::make_obs(Vector::Constant(1, -0.055634), 0.01);
  const double x_end = propagate(model, x0, w, c).dof[0];
  const double dphi = (x_end - y.y[0]) / 0.01;
  for (int n = 1; n <= 10; ++n) {
    const double expected = kLinear.D * kLinear.dt * dphi * std::pow(model.decay(), 10 - n) / 1.05 + w.dW(n - 1, 0);
    EXPECT_NEAR(grad_phi_hat(model, x0, w, c, y, n)[0], expected, 1e-12 * std::abs(expected) + 1e-14);
  }
}

TEST(GradPhiHat, LinearMatchesFiniteDifferences) {
  LinearSdeModel model(kLinear);
  const NoiseWindow w = test::random_noise(model, 10, 9);
  const ControlWindow c = test::random_control(model, 10, 10);
  const ModelState x0{Vector::Constant(1, -0.4), 0};
  const auto y = test::make_obs(Vector::Constant(1, 0.2), 0.01);
  const Matrix all = grad_phi_hat_all(model, x0, w, c, y);
  for (int n = 1; n <= 10; ++n) {
    const double g = grad_phi_hat(model, x0, w, c, y, n)[0];
    const double fd = fd_row(model, x0, w, c, y, n, 0, 1e-5);
    EXPECT_LT(std::abs(g - fd), 1e-4 * std::abs(fd)) << "substep " << n;
    EXPECT_NEAR(all(n - 1, 0), g, 1e-12 * std::abs(g));
  }
}

TEST(GradPhiHat, SksMatchesFiniteDifferencesAlongRandomDirections) {
  SksModel model(small_sks(16));
  const int ns = 5;
  const NoiseWindow w = test::random_noise(model, ns, 11);
  const ControlWindow c = test::random_control(model, ns, 12);
  const ModelState x0 = sks_start(model);
  RngStream s(StreamKey{13, 0, 0, 0, 0, Purpose::model_noise});
  Vector yv(model.obs_dim());
  for (auto& v : yv) v = s.standard_normal();
  const auto y = test::make_obs(yv, 2.5);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % ns;
    Vector d(model.noise_dim());
    for (auto& v : d) v = s.standard_normal();
    d.normalize();
    const double g = grad_phi_hat(model, x0, w, c, y, n).dot(d);
    const double eps = 1e-5;
    ControlWindow cp = c, cm = c;
    cp.dLambda.row(n - 1) += eps * d.transpose();
    cm.dLambda.row(n - 1) -= eps * d.transpose();
    const double fd = (phi_hat_of_window(model, x0, w, cp, y) - phi_hat_of_window(model, x0, w, cm, y)) / (2 * eps);
    EXPECT_LT(std::abs(g - fd), 1e-3 * std::abs(fd)) << "direction " << k;
  }
}

TEST(GradPhiHat, BadSubstep) {
  LinearSdeModel model(kLinear);
  const auto y = test::make_obs(Vector::Zero(1), 0.01);
  EXPECT_THROW(grad_phi_hat(model, ModelState{Vector::Zero(1), 0}, NoiseWindow(10, 1, 0.1), ControlWindow(10, 1), y, 0),
               std::out_of_range);
}

TEST(SubstepObjective, AgreesWithWindowFunctions) {
  LinearSdeModel model(kLinear);
  NoiseWindow w = test::random_noise(model, 10, 14);
  ControlWindow c = test::random_control(model, 10, 15);
  const int n = 4;
  // Rows after n are still hidden.
  w.dW.bottomRows(10 - n).setZero();
  c.dLambda.bottomRows(10 - n).setZero();
  const ModelState x0{Vector::Constant(1, 0.25), 0};
  const auto y = test::make_obs(Vector::Constant(1, 0.1), 0.01);
  Vector x_before = x0.dof;
  for (int m = 1; m < n; ++m) x_before = model.step(x_before, effective_increment(w, c, m));
  const SubstepObjective obj(model, x_before, w, c, y, n);
  const Vector row = Vector::Constant(1, -0.7);
  ControlWindow c2 = c;
  c2.dLambda.row(n - 1) = row.transpose();
  EXPECT_NEAR(obj.value(row), phi_hat_of_window(model, x0, w, c2, y), 1e-12);
  Vector grad;
  EXPECT_NEAR(obj.value_and_gradient(row, grad), obj.value(row), 1e-12);
  EXPECT_NEAR(grad[0], grad_phi_hat(model, x0, w, c2, y, n)[0], 1e-10);
  EXPECT_NEAR(obj.value_scaled(row, 0.5), obj.value(0.5 * row), 0.0);
  EXPECT_EQ(obj.end_state(row), propagate(model, x0, w, c2).dof);
}
