#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetspde/bspde.hpp"
#include "hetspde/coeffs.hpp"
#include "hetspde/forward.hpp"
#include "hetspde/game.hpp"
#include "hetspde/grid.hpp"
#include "hetspde/shapes.hpp"

namespace hetspde {

/// Parse or validation failure; `line` is 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct CoefficientBlock {
  std::string kind;  // constant | piecewise | smooth
  CoefficientField field;
  std::optional<double> lambda;
  std::optional<double> Lambda;
};

struct GridBlock {
  double x_min;
  double x_max;
  std::int64_t n;
};

struct TimeBlock {
  double T;
  std::int64_t steps;
};

struct NoiseBlock {
  Shape drift = parse_shape("zero");  // kappa as a function of the state y
  Shape sigma = parse_shape("zero");  // additive noise profile in x
  double lipschitz = 1.0;
  double semigroup_bound = 1.0;
};

struct BspdeBlock {
  double c = 0.0;
  double gamma = 0.0;
  std::optional<Shape> f;  // time independent source
  Shape g = parse_shape("zero");
  std::vector<double> probes;
  double probe_time = 0.0;
};

struct GameBlock {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
  double sigma0 = 0.0;
  std::string noise_profile = "constant";  // constant | sqrt_a
  Shape alpha1 = parse_shape("zero");
  Shape alpha2 = parse_shape("zero");
  Shape xi = parse_shape("zero");
  std::optional<ControlBox> box1;
  std::optional<ControlBox> box2;
};

struct EnsembleBlock {
  std::int64_t paths = 1000;
  std::uint64_t seed = 42;
};

struct OutputBlock {
  std::string dir = "out";
  int slices = 11;
};

struct VerifyBlock {
  double tolerance_scale = 1.0;
  std::vector<int> checks;  // empty: chosen from the scenario regime
  std::int64_t mc_paths = 100000;
  std::int64_t mc_steps = 2000;
  std::int64_t deviation_paths = 10000;
};

struct Scenario {
  std::string source;
  std::string text;
  CoefficientBlock coefficients;
  GridBlock grid;
  TimeBlock time;
  NoiseBlock noise;
  std::optional<Shape> forward_xi;  // initial state of non-game forward runs
  std::optional<BspdeBlock> bspde;
  std::optional<GameBlock> game;
  EnsembleBlock ensemble;
  OutputBlock output;
  VerifyBlock verify;
};

/// Grammar: one `section.key = value` per line, `#` starts a comment, blank
/// lines ignored. Unknown sections or keys, duplicates and malformed values
/// are errors; coefficients, grid and time are required.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);

WeightedGrid make_grid(const Scenario& scenario);
ForwardProblem make_forward_problem(const Scenario& scenario, const WeightedGrid& grid);
LinearBspdeProblem make_bspde_problem(const Scenario& scenario);
GameSpec make_game_spec(const Scenario& scenario, const WeightedGrid& grid);

/// FNV-1a 64 of the scenario text followed by the seed.
std::uint64_t fingerprint(const Scenario& scenario, std::uint64_t seed);
std::string fingerprint_hex(const Scenario& scenario, std::uint64_t seed);

}  // namespace hetspde
