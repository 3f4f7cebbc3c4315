#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace hetspde {

/// Independent generator for (seed, stream_id, salt); identical inputs give
/// identical streams regardless of the order in which streams are created.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t salt = 0);

/// Brownian increments dB[p][n] ~ N(0, dt), drawn from the stream of path p.
class PathEnsemble {
 public:
  PathEnsemble(std::int64_t n_paths, std::int64_t n_steps, double horizon, std::uint64_t seed);

  std::int64_t n_paths() const { return n_paths_; }
  std::int64_t n_steps() const { return n_steps_; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / static_cast<double>(n_steps_); }
  std::uint64_t seed() const { return seed_; }

  Eigen::VectorXd increments(std::int64_t path) const;

 private:
  std::int64_t n_paths_;
  std::int64_t n_steps_;
  double horizon_;
  std::uint64_t seed_;
};

}  // namespace hetspde
