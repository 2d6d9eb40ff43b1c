#include "nudgepf/rng.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace nudgepf {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t absorb(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v));
}

}  // namespace

std::uint64_t stream_seed(const StreamKey& key) noexcept {
  std::uint64_t h = splitmix64(key.master_seed);
  h = absorb(h, static_cast<std::uint64_t>(key.purpose));
  h = absorb(h, key.particle_id);
  h = absorb(h, key.window_index);
  h = absorb(h, key.substep);
  h = absorb(h, key.sequence);
  return h;
}

RngStream::RngStream(const StreamKey& key) : engine_(stream_seed(key)) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::standard_normal() {
  boost::random::normal_distribution<double> n01(0.0, 1.0);
  return n01(engine_);
}

RngStream derive_stream(const StreamKey& key) { return RngStream(key); }

Eigen::VectorXd sample_brownian(RngStream& stream, Eigen::Index n_noise, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_brownian: dt must be positive");
  if (n_noise < 1) throw std::invalid_argument("sample_brownian: n_noise must be >= 1");
  const double sd = std::sqrt(dt);
  Eigen::VectorXd out(n_noise);
  for (Eigen::Index j = 0; j < n_noise; ++j) out[j] = sd * stream.standard_normal();
  return out;
}

}  // namespace nudgepf
