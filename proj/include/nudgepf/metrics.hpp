#pragma once

#include <stdexcept>
#include <vector>

#include "nudgepf/rng.hpp"
#include "nudgepf/windows.hpp"

namespace nudgepf {

class UndefinedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// In every metric `hx` holds one particle per row (N_p x M) in observation space.

/// Mean over particles of ||y_true - h(X_i)||_2 / ||y_true||_2.
double rmse(const Vector& y_true, const Matrix& hx);
/// ||y_true - mean_i h(X_i)||_1 / ||y_true||_1.
double rb(const Vector& y_true, const Matrix& hx);
/// sum_i ||mean - h(X_i)||_2^2 / ((N_p - 1) ||y_true||_2^2).
double res(const Vector& y_true, const Matrix& hx);

/// Number of ensemble values strictly below the truth, with ties broken
/// uniformly at random among the tied positions. Result in [0, N_p].
int rank_update(double truth, const Vector& ensemble_values, RngStream& tie_stream);

/// Pooled (N_p + 1)-bin rank histogram.
class RankHistogram {
 public:
  explicit RankHistogram(int n_particles) : counts_(static_cast<std::size_t>(n_particles) + 1, 0) {}
  void add(int rank) { ++counts_.at(static_cast<std::size_t>(rank)); }
  const std::vector<long>& counts() const { return counts_; }
  long total() const;

 private:
  std::vector<long> counts_;
};

struct DiagnosticsRecord {
  int window_index = 0;
  double ess_pre_resample = 0.0;
  double rmse = 0.0;
  double rb = 0.0;
  double res = 0.0;
  std::vector<int> ranks;
};

/// All metrics and per-point ranks for one window.
DiagnosticsRecord diagnose(int window_index, double ess, const Vector& y_true, const Matrix& hx,
                           RngStream& tie_stream);

}  // namespace nudgepf
