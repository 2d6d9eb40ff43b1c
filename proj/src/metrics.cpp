#include "nudgepf/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace nudgepf {
namespace {

void check(const Vector& y_true, const Matrix& hx) {
  if (hx.cols() != y_true.size()) throw std::invalid_argument("metric: observation sizes differ");
  if (hx.rows() < 1) throw std::invalid_argument("metric: empty ensemble");
}

}  // namespace

double rmse(const Vector& y_true, const Matrix& hx) {
  check(y_true, hx);
  const double norm = y_true.norm();
  if (norm == 0.0) throw UndefinedMetricError("rmse: truth has zero norm");
  double total = 0.0;
  for (Eigen::Index i = 0; i < hx.rows(); ++i) total += (y_true.transpose() - hx.row(i)).norm();
  return total / (static_cast<double>(hx.rows()) * norm);
}

double rb(const Vector& y_true, const Matrix& hx) {
  check(y_true, hx);
  const double norm = y_true.lpNorm<1>();
  if (norm == 0.0) throw UndefinedMetricError("rb: truth has zero norm");
  const Vector mean = hx.colwise().mean().transpose();
  return (y_true - mean).lpNorm<1>() / norm;
}

double res(const Vector& y_true, const Matrix& hx) {
  check(y_true, hx);
  if (hx.rows() < 2) throw UndefinedMetricError("res: need at least two particles");
  const double norm2 = y_true.squaredNorm();
  if (norm2 == 0.0) throw UndefinedMetricError("res: truth has zero norm");
  const Eigen::RowVectorXd mean = hx.colwise().mean();
  const double spread = (hx.rowwise() - mean).squaredNorm();
  return spread / (static_cast<double>(hx.rows() - 1) * norm2);
}

int rank_update(double truth, const Vector& ensemble_values, RngStream& tie_stream) {
  int below = 0;
  int tied = 0;
  for (double v : ensemble_values) {
    if (v < truth) ++below;
    else if (v == truth) ++tied;
  }
  if (tied == 0) return below;
  // The truth may sit anywhere among the tied members: tied + 1 slots.
  const auto slot = static_cast<int>(tie_stream.uniform() * (tied + 1));
  return below + std::min(slot, tied);
}

long RankHistogram::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

DiagnosticsRecord diagnose(int window_index, double ess, const Vector& y_true, const Matrix& hx,
                           RngStream& tie_stream) {
  DiagnosticsRecord rec;
  rec.window_index = window_index;
  rec.ess_pre_resample = ess;
  rec.rmse = rmse(y_true, hx);
  rec.rb = rb(y_true, hx);
  rec.res = hx.rows() >= 2 ? res(y_true, hx) : 0.0;
  rec.ranks.reserve(static_cast<std::size_t>(y_true.size()));
  for (Eigen::Index m = 0; m < y_true.size(); ++m) {
    rec.ranks.push_back(rank_update(y_true[m], hx.col(m), tie_stream));
  }
  return rec;
}

}  // namespace nudgepf
