#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetspde/bspde.hpp"
#include "hetspde/coeffs.hpp"
#include "hetspde/forward.hpp"
#include "hetspde/game.hpp"
#include "hetspde/grid.hpp"

namespace hetspde {

struct Scenario;

enum class Compare { kAtMost, kAtLeast, kEqual };

struct Check {
  std::string name;
  int criterion = 0;
  double measured = 0.0;
  double tolerance = 0.0;
  Compare compare = Compare::kAtMost;
  bool pass = false;
  double runtime = 0.0;  // seconds, filled per criterion
  std::string detail;
};

/// Builds a check; `tolerance` is compared against `measured` in the given sense.
Check make_check(std::string name, int criterion, double measured, double tolerance, Compare compare,
                 std::string detail = {});

struct VerificationReport {
  std::vector<Check> checks;
  std::string fingerprint;
  bool pass() const;
};

struct CheckOptions {
  std::uint64_t seed = 42;
  int threads = 0;
  double tolerance_scale = 1.0;  // multiplies every upper-bound tolerance
};

// Default parameters reproduce the acceptance criteria; run_suite overrides
// them from the scenario where the scenario supplies the data.

struct DualityParams {
  std::optional<CoefficientField> smooth;     // default: a generic smooth field
  std::optional<CoefficientField> piecewise;  // default: a generic two-phase field
  int pairs = 20;
  std::vector<Eigen::Index> sizes{201, 401, 801};
  double x_min = -8.0;
  double x_max = 8.0;
  double bound = 1e-4;
  double piecewise_order = 0.8;
};
std::vector<Check> check_duality(const DualityParams& params, const CheckOptions& options);

std::vector<Check> check_self_adjointness(const CheckOptions& options);

struct CoercivityParams {
  std::optional<CoefficientField> field;  // default: a generic two-phase field
  int trials = 100;
  Eigen::Index n = 401;
  double x_min = -6.0;
  double x_max = 6.0;
};
std::vector<Check> check_coercivity(const CoercivityParams& params, const CheckOptions& options);

struct ClosedFormParams {
  LinearBspdeProblem problem;  // default: sigma = 1, b0 = 0.5, gamma = 0.3, c = -0.2, Gaussian bump
  double x_min = -10.0;
  double x_max = 10.0;
  Eigen::Index n = 801;
  int steps = 400;
  double tolerance = 1e-3;
  double min_ratio = 3.0;
  ClosedFormParams();
};
std::vector<Check> check_closed_form(const ClosedFormParams& params, const CheckOptions& options);

struct GradientParams {
  LinearBspdeProblem problem;
  std::vector<double> spacings{0.2, 0.1, 0.05};
  double min_slope = 1.8;
  double exact_tolerance = 1e-8;
  GradientParams();
};
std::vector<Check> check_martingale_gradient(const GradientParams& params, const CheckOptions& options);

struct McParams {
  std::vector<std::pair<std::string, LinearBspdeProblem>> problems;  // default: smooth and piecewise
  std::vector<double> probes{-1.0, -0.5, 0.0, 0.5, 1.0};
  double probe_time = 0.0;
  std::int64_t paths = 100000;
  std::int64_t steps = 2000;
  double x_min = -8.0;
  double x_max = 8.0;
  Eigen::Index n = 801;
  int fd_steps = 400;
  McParams();
};

/// Each probe passes iff |FD - MC| <= 3 stderr + slack, slack = |FD(h) - FD(h/2)|.
std::vector<Check> mc_vs_fd(const std::string& label, const LinearBspdeProblem& problem,
                            const std::vector<std::pair<double, double>>& probes, std::int64_t n_paths,
                            std::int64_t n_steps, const WeightedGrid& grid, int fd_steps, const CheckOptions& options,
                            int criterion = 6);
std::vector<Check> check_feynman_kac(const McParams& params, const CheckOptions& options);

struct TransmissionParams {
  LinearBspdeProblem problem;  // default: a- = 1, a+ = 3, rho = 1, b- = 0.2, b+ = -0.1
  std::vector<Eigen::Index> sizes{801, 1601, 3201};
  double x_min = -8.0;
  double x_max = 8.0;
  double min_order_u = 1.7;
  double min_order_flux = 0.8;
  TransmissionParams();
};

/// Observed orders of |jump_u| and |jump_flux| between consecutive refinements.
struct JumpOrders {
  std::vector<double> jump_u;
  std::vector<double> jump_flux;
  std::vector<double> order_u;
  std::vector<double> order_flux;
};
/// Jumps below `floor` count as converged (any order is accepted).
std::vector<Check> judge_jump_orders(const std::string& prefix, const JumpOrders& orders, double min_u,
                                     double min_flux, int criterion, double floor = 1e-12);
std::vector<Check> check_transmission(const TransmissionParams& params, const CheckOptions& options);

struct PicardParams {
  std::vector<double> windows{0.05, 0.1, 0.2};
  double dt = 0.005;
  std::int64_t paths = 200;
  int iterations = 6;
  PicardParams();
  ForwardProblem problem;  // default: drift tanh(y), additive noise 0.3
  double x_min = -8.0;
  double x_max = 8.0;
  Eigen::Index n = 201;
};
std::vector<Check> picard_contraction_audit(const ForwardProblem& problem, const std::vector<double>& windows,
                                            const WeightedGrid& grid, double dt, std::int64_t paths,
                                            int iterations, const CheckOptions& options);
std::vector<Check> check_picard(const PicardParams& params, const CheckOptions& options);

/// The two benchmark games on a window grid.
GameSpec heat_game_spec(const WeightedGrid& grid);
GameSpec two_phase_game_spec(const WeightedGrid& grid);

struct GameParams {
  std::function<GameSpec(const WeightedGrid&)> spec;
  CoefficientField field;  // grid weights
  double x_min = -8.0;
  double x_max = 8.0;
  Eigen::Index n = 321;
  std::int64_t steps = 100;
  std::int64_t paths = 1000;
};
GameParams heat_game_params();
GameParams two_phase_game_params();

struct StationarityParams {
  GameParams game = heat_game_params();
  double residual_tolerance = 1e-10;
  double route_tolerance = 2e-3;
};
std::vector<Check> check_stationarity(const StationarityParams& params, const CheckOptions& options);

struct DeviationParams {
  GameParams game = heat_game_params();
  int directions = 8;
  std::vector<double> amplitudes{-0.4, -0.2, -0.1, 0.1, 0.2, 0.4};
  std::int64_t paths = 10000;
  double vertex_tolerance = 0.05;
  DeviationParams();
};
std::vector<Check> check_deviation(const DeviationParams& params, const CheckOptions& options,
                                   DeviationReport* report = nullptr);

struct PiecewiseGameParams {
  GameParams game = two_phase_game_params();
  std::vector<std::int64_t> checkpoints;  // default: every tenth time node
  int kernel_steps_per_unit_time = 200;
  std::int64_t paths = 500;
  double route_tolerance = 5e-3;
  std::vector<Eigen::Index> sizes{801, 1601, 3201};
  double min_order_u = 1.7;
  double min_order_flux = 0.8;
};
std::vector<Check> check_piecewise_game(const PiecewiseGameParams& params, const CheckOptions& options);

struct CriterionInfo {
  int id;
  std::string name;
  std::string summary;
};
const std::vector<CriterionInfo>& criteria();

/// Runs one criterion with its default parameters, timing it; exceptions are
/// recorded as a failed check.
std::vector<Check> run_criterion(int id, const CheckOptions& options);

/// Selects criteria from the scenario regime (or verify.checks) and runs
/// them with parameters taken from the scenario.
VerificationReport run_suite(const Scenario& scenario, const CheckOptions& options);
std::vector<int> suite_criteria(const Scenario& scenario);

/// key = value lines, one block per check.
void write_report_text(std::ostream& out, const VerificationReport& report);
void write_report_csv(std::ostream& out, const VerificationReport& report);

}  // namespace hetspde
