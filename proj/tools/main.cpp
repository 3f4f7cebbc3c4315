#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hetspde: SPDEs and linear-quadratic games in heterogeneous media"};
  app.require_subcommand(1);

  hetspde::cli::CommonOptions common;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "scenario file")->check(CLI::ExistingFile);
    if (config_required) opt->required();
    sub->add_option("--seed", seed, "override ensemble.seed");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", common.out, "output directory (default: output.dir)");
  };

  auto* fwd = app.add_subcommand("simulate-forward", "simulate the forward SPDE ensemble");
  add_common(fwd, true);
  std::int64_t forward_paths = 0;
  fwd->add_option("--paths", forward_paths, "also write this many individual paths");

  auto* bsp = app.add_subcommand("solve-bspde", "solve the linear backward SPDE");
  add_common(bsp, true);
  std::string method = "fd";
  std::int64_t mc_paths = 100000;
  bsp->add_option("--method", method, "closed | fd | mc")->check(CLI::IsMember({"closed", "fd", "mc"}));
  bsp->add_option("--paths", mc_paths, "Monte Carlo paths for --method mc");

  auto* game = app.add_subcommand("solve-game", "compute the open-loop Nash equilibrium");
  add_common(game, true);
  int deviations = 0;
  game->add_option("--deviations", deviations, "number of random deviation directions to test");

  auto* ver = app.add_subcommand("verify", "run the verification suite for a scenario");
  add_common(ver, false);
  bool list = false;
  ver->add_flag("--list", list, "print check names without running");

  if (argc == 1) {
    std::cout << app.help();
    return 0;
  }
  CLI11_PARSE(app, argc, argv);
  for (auto* sub : {fwd, bsp, game, ver})
    if (sub->parsed() && sub->count("--seed")) common.seed = seed;

  try {
    if (fwd->parsed()) return hetspde::cli::simulate_forward(common, forward_paths);
    if (bsp->parsed()) return hetspde::cli::solve_bspde(common, method, mc_paths);
    if (game->parsed()) return hetspde::cli::solve_game(common, deviations);
    if (!list && common.config.empty()) {
      std::cerr << "verify: --config is required unless --list is given\n";
      return 2;
    }
    return hetspde::cli::verify(common, list);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
