#include "hetspde/random.hpp"

#include <cmath>
#include <stdexcept>

namespace hetspde {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t salt) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(salt));
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

PathEnsemble::PathEnsemble(std::int64_t n_paths, std::int64_t n_steps, double horizon, std::uint64_t seed)
    : n_paths_(n_paths), n_steps_(n_steps), horizon_(horizon), seed_(seed) {
  if (n_paths < 1 || n_steps < 1) throw std::invalid_argument("ensemble needs at least one path and one step");
  if (!(horizon > 0.0)) throw std::invalid_argument("ensemble horizon must be positive");
}

Eigen::VectorXd PathEnsemble::increments(std::int64_t path) const {
  std::mt19937_64 rng = make_stream(seed_, static_cast<std::uint64_t>(path), 0x42524f574eULL);
  std::normal_distribution<double> normal(0.0, std::sqrt(dt()));
  Eigen::VectorXd dB(n_steps_);
  for (std::int64_t n = 0; n < n_steps_; ++n) dB(n) = normal(rng);
  return dB;
}

}  // namespace hetspde
