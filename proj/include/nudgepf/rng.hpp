#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace nudgepf {

/// What a random stream is used for. Streams with different purposes never
/// alias, so e.g. resampling never consumes model-noise draws.
enum class Purpose : std::uint8_t {
  model_noise = 0,
  jitter_noise = 1,
  resample_uniform = 2,
  obs_noise = 3,
  truth_noise = 4,
  initial_condition = 5,
  initial_spread = 6,
  rank_ties = 7,
};

/// Full identity of a random stream. Equal keys give identical streams.
///
/// `substep` is 1-based within an assimilation window (0 when the stream is
/// not tied to a substep). `sequence` separates repeated uses inside one
/// window, e.g. successive tempering stages.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t particle_id = 0;
  std::uint64_t window_index = 0;
  std::uint64_t substep = 0;
  std::uint64_t sequence = 0;
  Purpose purpose = Purpose::model_noise;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Mixes every key field into a 64-bit seed (splitmix64 finaliser chain).
std::uint64_t stream_seed(const StreamKey& key) noexcept;

/// A value-like random stream. Copying it forks the stream state.
///
/// Gaussian draws use the ziggurat sampler of Boost.Random; uniforms are
/// 53-bit doubles in [0, 1).
class RngStream {
 public:
  explicit RngStream(const StreamKey& key);

  double uniform();
  double standard_normal();
  double normal(double mean, double stddev) { return mean + stddev * standard_normal(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Pure function of the key.
RngStream derive_stream(const StreamKey& key);

/// Vector of n_noise iid N(0, dt) draws. Throws std::invalid_argument for dt <= 0
/// or n_noise < 1.
Eigen::VectorXd sample_brownian(RngStream& stream, Eigen::Index n_noise, double dt);

}  // namespace nudgepf
