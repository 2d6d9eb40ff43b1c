#pragma once

#include <cmath>
#include <vector>

#include "nudgepf/filters.hpp"
#include "nudgepf/linear_sde.hpp"
#include "nudgepf/rng.hpp"

namespace nudgepf::test {

inline NoiseWindow random_noise(const Model& model, int n_substeps, std::uint64_t seed) {
  NoiseWindow w(n_substeps, model.noise_dim(), model.dt());
  RngStream stream(StreamKey{seed, 0, 0, 0, 0, Purpose::model_noise});
  for (int n = 0; n < n_substeps; ++n) {
    w.dW.row(n) = sample_brownian(stream, model.noise_dim(), model.dt()).transpose();
  }
  return w;
}

inline ControlWindow random_control(const Model& model, int n_substeps, std::uint64_t seed,
                                    double scale = 1.0) {
  ControlWindow c(n_substeps, model.noise_dim());
  RngStream stream(StreamKey{seed, 0, 0, 0, 0, Purpose::jitter_noise});
  for (auto& v : c.dLambda.reshaped()) v = scale * stream.standard_normal();
  return c;
}

inline Observation make_obs(const Vector& y, double variance) {
  Observation obs;
  obs.y = y;
  obs.obs_variance = variance;
  obs.window_index = 1;
  return obs;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(xs.size() - 1);
  return m;
}

}  // namespace nudgepf::test
