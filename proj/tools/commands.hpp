#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hetspde::cli {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;  // empty: output.dir of the scenario
};

int simulate_forward(const CommonOptions& common, std::int64_t paths_to_write);
int solve_bspde(const CommonOptions& common, const std::string& method, std::int64_t mc_paths);
int solve_game(const CommonOptions& common, int deviations);
int verify(const CommonOptions& common, bool list_only);

}  // namespace hetspde::cli
