#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "hetspde/bspde.hpp"
#include "hetspde/forward.hpp"
#include "hetspde/game.hpp"
#include "hetspde/parallel.hpp"
#include "hetspde/scenario.hpp"
#include "hetspde/verify.hpp"

namespace hetspde::cli {
namespace {

struct Context {
  Scenario scenario;
  std::uint64_t seed;
  std::filesystem::path out;
};

Context open(const CommonOptions& common) {
  Context ctx{load_scenario(common.config), 0, {}};
  ctx.seed = common.seed.value_or(ctx.scenario.ensemble.seed);
  ctx.out = common.out.empty() ? std::filesystem::path(ctx.scenario.output.dir) : std::filesystem::path(common.out);
  std::filesystem::create_directories(ctx.out);
  set_default_threads(std::max(1, common.threads));
  return ctx;
}

std::ofstream open_csv(const Context& ctx, const std::string& name, const std::string& command) {
  const auto path = ctx.out / name;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "# fingerprint=" << fingerprint_hex(ctx.scenario, ctx.seed) << " command=" << command
    << " seed=" << ctx.seed << " scenario=" << ctx.scenario.source << '\n';
  f.precision(12);
  return f;
}

std::vector<std::int64_t> slice_steps(std::int64_t steps, int slices) {
  std::vector<std::int64_t> out;
  if (slices <= 1) return {steps};
  for (int k = 0; k < slices; ++k) {
    const auto s = static_cast<std::int64_t>(std::llround(static_cast<double>(k) * steps / (slices - 1)));
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

}  // namespace

int simulate_forward(const CommonOptions& common, std::int64_t paths_to_write) {
  const Context ctx = open(common);
  const Scenario& sc = ctx.scenario;
  const WeightedGrid grid = make_grid(sc);
  ForwardProblem problem = make_forward_problem(sc, grid);
  ControlPair controls = ControlPair::zero(sc.time.steps);
  if (sc.game) {
    // Forward run of a game scenario uses the equilibrium controls.
    const GameSpec spec = make_game_spec(sc, grid);
    const PathEnsemble ensemble(sc.ensemble.paths, sc.time.steps, sc.time.T, ctx.seed);
    controls = solve_equilibrium(spec, grid, ensemble).controls;
  }
  const PathEnsemble ensemble(sc.ensemble.paths, sc.time.steps, sc.time.T, ctx.seed);
  ForwardOptions options;
  options.record_steps = slice_steps(sc.time.steps, sc.output.slices);
  options.keep_paths = paths_to_write > 0;
  const ForwardSolution sol = simulate_forward(problem, controls, ensemble, grid, options);
  {
    auto f = open_csv(ctx, "forward_stats.csv", "simulate-forward");
    write_forward_stats_csv(f, sol, grid);
  }
  if (paths_to_write > 0) {
    auto f = open_csv(ctx, "forward_paths.csv", "simulate-forward");
    write_forward_paths_csv(f, sol, grid, paths_to_write);
  }
  std::cout << "simulate-forward: " << sc.ensemble.paths << " paths, " << sol.record_steps.size() << " slices -> "
            << (ctx.out / "forward_stats.csv").string() << '\n';
  return 0;
}

int solve_bspde(const CommonOptions& common, const std::string& method, std::int64_t mc_paths) {
  const Context ctx = open(common);
  const Scenario& sc = ctx.scenario;
  const WeightedGrid grid = make_grid(sc);
  const LinearBspdeProblem problem = make_bspde_problem(sc);
  const int steps = static_cast<int>(sc.time.steps);
  const bool constant = problem.field.constant_values().has_value() && !problem.field.is_piecewise();
  const int stride = std::max<int>(1, steps / std::max(1, sc.output.slices - 1));

  std::optional<BackwardSolution> fd, closed;
  if (method != "closed") fd = solve_backward_fd(problem, grid, steps);
  if (method == "closed" || constant) {
    if (!constant) throw std::invalid_argument("--method closed needs constant coefficients");
    closed = closed_form_on_grid(problem, grid, steps);
  }

  {
    auto f = open_csv(ctx, "bspde.csv", "solve-bspde");
    if (fd && closed) {
      f << "t,x,u,q,u_closed,q_closed\n";
      for (int n = 0; n <= steps; n += stride)
        for (Eigen::Index j = 0; j < grid.size(); ++j)
          f << fd->times(n) << ',' << grid.node(j) << ',' << fd->u(n, j) << ',' << fd->q(n, j) << ','
            << closed->u(n, j) << ',' << closed->q(n, j) << '\n';
    } else {
      write_backward_csv(f, fd ? *fd : *closed, grid, stride);
    }
  }
  if (fd && problem.field.is_piecewise()) {
    auto f = open_csv(ctx, "transmission.csv", "solve-bspde");
    f << "t,jump_u,jump_flux\n";
    for (int n = 0; n <= steps; n += stride) {
      const TransmissionJump j = transmission_residual(*fd, problem.field, grid, n);
      f << fd->times(n) << ',' << j.jump_u << ',' << j.jump_flux << '\n';
    }
    const TransmissionJump j0 = transmission_residual(*fd, problem.field, grid, 0);
    std::cout << "transmission at t = 0: jump_u = " << j0.jump_u << ", jump_flux = " << j0.jump_flux << '\n';
  }
  if (method == "mc") {
    const BackwardSolution& ref = fd ? *fd : *closed;
    std::vector<double> probes = sc.bspde->probes;
    if (probes.empty()) probes = {0.0};
    const double t = sc.bspde->probe_time;
    const auto n = static_cast<Eigen::Index>(std::llround(t / sc.time.T * steps));
    auto f = open_csv(ctx, "bspde_mc.csv", "solve-bspde");
    f << "t,x,u,u_mc,mc_stderr\n";
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const double x = probes[k];
      const double s = (x - grid.x_min()) / grid.spacing();
      const auto j = static_cast<Eigen::Index>(std::clamp(std::floor(s), 0.0, double(grid.size() - 2)));
      const double w = s - static_cast<double>(j);
      const double u = (1.0 - w) * ref.u(n, j) + w * ref.u(n, j + 1);
      const McEstimate mc = feynman_kac_mc(problem, t, x, mc_paths, sc.verify.mc_steps, ctx.seed + 7919 * k);
      f << t << ',' << x << ',' << u << ',' << mc.estimate << ',' << mc.std_error << '\n';
      std::cout << "probe x = " << x << ": u = " << u << ", MC = " << mc.estimate << " +- " << mc.std_error << '\n';
    }
  }
  std::cout << "solve-bspde (" << method << ") -> " << (ctx.out / "bspde.csv").string() << '\n';
  return 0;
}

int solve_game(const CommonOptions& common, int deviations) {
  const Context ctx = open(common);
  const Scenario& sc = ctx.scenario;
  const WeightedGrid grid = make_grid(sc);
  const GameSpec spec = make_game_spec(sc, grid);
  const PathEnsemble ensemble(sc.ensemble.paths, sc.time.steps, sc.time.T, ctx.seed);
  const Equilibrium eq = solve_equilibrium(spec, grid, ensemble);
  {
    auto f = open_csv(ctx, "equilibrium.csv", "solve-game");
    write_equilibrium_csv(f, spec, eq, grid);
  }
  const ConvexityReport convexity = convexity_certificate(spec);
  const bool stationary = std::max(eq.r1, eq.r2) <= 1e-10;
  std::cout << std::setprecision(8);
  std::cout << "stationarity: r1 = " << eq.r1 << ", r2 = " << eq.r2 << " -> " << (stationary ? "PASS" : "FAIL")
            << '\n';
  std::cout << "convexity: " << (convexity.pass ? "PASS" : "FAIL") << " (" << convexity.note << ")\n";
  if (eq.clipped) std::cout << "box constraints active (" << eq.iterations << " projected iterations)\n";

  const ForwardProblem problem = game_forward_problem(spec, grid);
  ForwardOptions fo;
  fo.record_steps = {sc.time.steps};
  const ControlPair zero = ControlPair::zero(sc.time.steps);
  const ForwardSolution idle = simulate_forward(problem, zero, ensemble, grid, fo);
  {
    auto f = open_csv(ctx, "costs.csv", "solve-game");
    f << "player,controls,J,std_error\n";
    for (int player = 1; player <= 2; ++player) {
      const CostEstimate at_eq = cost(spec, player, eq.controls, eq.forward, grid);
      const CostEstimate at_zero = cost(spec, player, zero, idle, grid);
      f << player << ",equilibrium," << at_eq.J << ',' << at_eq.std_error << '\n';
      f << player << ",zero," << at_zero.J << ',' << at_zero.std_error << '\n';
      std::cout << "J" << player << " = " << at_eq.J << " +- " << at_eq.std_error << " (zero controls: " << at_zero.J
                << ")\n";
    }
  }
  if (spec.field.is_piecewise()) {
    const BackwardSolution adj =
        solve_backward_generator(adjoint_generator(spec.field, grid), 0.0, {}, spec.gamma3 * eq.mean_terminal,
                                 spec.horizon, grid, static_cast<int>(sc.time.steps), spec.field,
                                 BackwardMethod::kFdTwoPhase);
    auto f = open_csv(ctx, "interface.csv", "solve-game");
    f << "t,jump_u,jump_flux\n";
    const int stride = std::max<int>(1, static_cast<int>(sc.time.steps) / std::max(1, sc.output.slices - 1));
    for (Eigen::Index n = 0; n < adj.times.size(); n += stride) {
      const TransmissionJump j = transmission_residual(adj, spec.field, grid, n);
      f << adj.times(n) << ',' << j.jump_u << ',' << j.jump_flux << '\n';
    }
    const TransmissionJump j0 = transmission_residual(adj, spec.field, grid, 0);
    std::cout << "adjoint interface at t = 0: jump_u = " << j0.jump_u << ", jump_flux = " << j0.jump_flux << '\n';
  }
  if (deviations > 0) {
    const auto directions = random_directions(deviations, sc.time.steps, ctx.seed);
    const DeviationReport report =
        nash_deviation_test(spec, eq, ensemble, directions, {-0.4, -0.2, -0.1, 0.1, 0.2, 0.4}, grid);
    auto f = open_csv(ctx, "deviations.csv", "solve-game");
    write_deviation_csv(f, report);
    std::cout << "deviations: " << report.records.size() << " tests, min dJ/stderr = " << report.worst_normalized
              << ", max |vertex| = " << report.max_abs_vertex << " -> " << (report.pass ? "PASS" : "FAIL") << '\n';
  }
  std::cout << "solve-game -> " << (ctx.out / "equilibrium.csv").string() << '\n';
  return stationary ? 0 : 1;
}

int verify(const CommonOptions& common, bool list_only) {
  if (list_only) {
    for (const CriterionInfo& c : criteria()) std::cout << c.id << ' ' << c.name << ": " << c.summary << '\n';
    return 0;
  }
  const Context ctx = open(common);
  CheckOptions options;
  options.seed = ctx.seed;
  options.threads = std::max(1, common.threads);
  options.tolerance_scale = ctx.scenario.verify.tolerance_scale;
  const VerificationReport report = run_suite(ctx.scenario, options);
  const auto text_path = ctx.out / "verify_report.txt";
  {
    std::ofstream f(text_path);
    write_report_text(f, report);
  }
  {
    auto f = open_csv(ctx, "verify_report.csv", "verify");
    write_report_csv(f, report);
  }
  for (const Check& c : report.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured << " tolerance=" << c.tolerance
              << '\n';
  std::cout << (report.pass() ? "verify: PASS" : "verify: FAIL") << " (report: " << text_path.string() << ")\n";
  return report.pass() ? 0 : 1;
}

}  // namespace hetspde::cli
