#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hetspde/game.hpp"
#include "hetspde/quadrature.hpp"
#include "hetspde/verify.hpp"

using namespace hetspde;

namespace {

constexpr std::int64_t kSteps = 50;

struct HeatGame {
  WeightedGrid grid{-8.0, 8.0, 161, CoefficientField::constant(1.0, 1.0, 0.3)};
  GameSpec spec = heat_game_spec(grid);
};

Eigen::VectorXd bump(const WeightedGrid& grid, double center, double width) {
  return sample_on(grid, [=](double x) { return std::exp(-(x - center) * (x - center) / (2 * width * width)); });
}

// E[phi(x - b0 + sqrt(var) Z)] by Gauss-Legendre quadrature against the density.
double gaussian_smoothing(const std::function<double(double)>& phi, double x, double b0, double var) {
  const auto [z, w] = gauss_legendre<double>(160);
  const double m = x - b0, s = std::sqrt(var), half = 9.0 * s;
  double total = 0.0;
  for (int k = 0; k < z.size(); ++k) {
    const double y = m + half * z(k);
    total += half * w(k) * phi(y) * std::exp(-(y - m) * (y - m) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
  }
  return total;
}

}  // namespace

TEST(Hamiltonian, OnlyRunningCostWithoutAdjoint) {
  HeatGame g;
  const auto A = assemble_operator(g.spec.field, g.grid);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(161);
  const HamiltonianEval h = hamiltonian(g.spec, 2, g.spec.xi, 0.7, -1.3, zero, zero, g.grid, A);
  EXPECT_DOUBLE_EQ(h.value, 0.5 * g.spec.gamma2 * 1.3 * 1.3);
}

TEST(Hamiltonian, ZeroControlsLeaveTheOperatorPairing) {
  HeatGame g;
  const auto A = assemble_operator(g.spec.field, g.grid);
  const Eigen::VectorXd p = bump(g.grid, 0.5, 1.0);
  const HamiltonianEval h = hamiltonian(g.spec, 1, g.spec.xi, 0.0, 0.0, p, Eigen::VectorXd::Zero(161), g.grid, A);
  EXPECT_NEAR(h.value, inner_product(p, A.apply(g.spec.xi), g.grid), 1e-14);
}

TEST(Hamiltonian, GradientMatchesCentralDifference) {
  HeatGame g;
  const auto A = assemble_operator(g.spec.field, g.grid);
  const Eigen::VectorXd p = bump(g.grid, 0.5, 1.0), q = bump(g.grid, -0.5, 2.0);
  const double eps = 1e-5, u1 = 0.3, u2 = -0.2;
  for (int player : {1, 2}) {
    const HamiltonianEval h = hamiltonian(g.spec, player, g.spec.xi, u1, u2, p, q, g.grid, A);
    const double d1 = (hamiltonian(g.spec, player, g.spec.xi, u1 + eps, u2, p, q, g.grid, A).value -
                       hamiltonian(g.spec, player, g.spec.xi, u1 - eps, u2, p, q, g.grid, A).value) /
                      (2 * eps);
    const double d2 = (hamiltonian(g.spec, player, g.spec.xi, u1, u2 + eps, p, q, g.grid, A).value -
                       hamiltonian(g.spec, player, g.spec.xi, u1, u2 - eps, p, q, g.grid, A).value) /
                      (2 * eps);
    EXPECT_NEAR(h.du1, d1, 1e-8);
    EXPECT_NEAR(h.du2, d2, 1e-8);
  }
}

TEST(Adjoint, ZeroTerminalGivesZeroAdjoint) {
  HeatGame g;
  const AdjointPair adj = solve_adjoint(g.spec, 1, Eigen::VectorXd::Zero(161), g.grid, kSteps);
  EXPECT_EQ(adj.p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(adj.q.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adjoint, MatchesTheGaussianConvolution) {
  HeatGame g;
  g.grid = WeightedGrid(-10.0, 10.0, 801, g.spec.field);
  g.spec = heat_game_spec(g.grid);
  auto phi = [](double y) { return std::exp(-(y - 0.5) * (y - 0.5) / 2); };
  const AdjointPair adj = solve_adjoint(g.spec, 1, sample_on(g.grid, phi), g.grid, 400);
  double worst = 0.0;
  for (Eigen::Index n : {0, 200, 399})
    for (Eigen::Index j = 200; j <= 600; j += 20) {
      const double tau = 1.0 - n / 400.0;
      const double exact = gaussian_smoothing(phi, g.grid.node(j), 0.3 * tau, tau);
      worst = std::max(worst, std::abs(adj.p(n, j) - g.spec.gamma3 * exact));
    }
  EXPECT_LE(worst, 1e-3);
}

TEST(Adjoint, DriftFreeEvenTerminalStaysEven) {
  GameSpec spec;
  spec.field = CoefficientField::constant(1.0, 1.0, 0.0);
  const WeightedGrid grid(-8.0, 8.0, 161, spec.field);
  spec.alpha1 = spec.alpha2 = spec.xi = Eigen::VectorXd::Zero(161);
  const AdjointPair adj = solve_adjoint(spec, 1, bump(grid, 0.0, 1.0), grid, 40);
  for (Eigen::Index n = 0; n <= 40; n += 10)
    for (Eigen::Index j = 0; j < 80; ++j) EXPECT_NEAR(adj.p(n, j), adj.p(n, 160 - j), 1e-13);
}

TEST(OptimalControl, NoActuatorNoControl) {
  HeatGame g;
  g.spec.alpha1.setZero();
  const AdjointPair adj = solve_adjoint(g.spec, 1, g.spec.xi, g.grid, kSteps);
  EXPECT_EQ(optimal_control(g.spec, 1, adj, g.grid).u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(OptimalControl, ProhibitiveWeightSuppressesTheControl) {
  HeatGame g;
  g.spec.gamma1 = 1e9;
  const AdjointPair adj = solve_adjoint(g.spec, 1, g.spec.xi, g.grid, kSteps);
  const double bound = adj.p.cwiseAbs().maxCoeff() * g.spec.alpha1.cwiseAbs().sum() * g.grid.spacing() / 1e9;
  EXPECT_LE(optimal_control(g.spec, 1, adj, g.grid).u.cwiseAbs().maxCoeff(), bound);
}

TEST(OptimalControl, ConstantAdjointUsesTheActuatorMass) {
  GameSpec spec;
  spec.field = CoefficientField::constant(2.0, 0.5, 0.0);
  const WeightedGrid grid(-6.0, 6.0, 241, spec.field);
  spec.alpha1 = bump(grid, 0.0, 0.5);
  spec.alpha2 = spec.alpha1;
  spec.xi = Eigen::VectorXd::Zero(241);
  spec.gamma1 = 4.0;
  AdjointPair adj;
  adj.p = Eigen::MatrixXd::Constant(3, 241, 1.5);
  adj.q = Eigen::MatrixXd::Zero(3, 241);
  // int alpha / rho = sqrt(2 pi) 0.5 / 2
  const double mass = std::sqrt(2 * std::numbers::pi) * 0.5 / 2.0;
  const ControlTrajectory u = optimal_control(spec, 1, adj, grid);
  for (Eigen::Index n = 0; n < 3; ++n) EXPECT_NEAR(u.u(n), -1.5 * mass / 4.0, 1e-10);
}

TEST(OptimalControl, BoxClipsTheControl) {
  HeatGame g;
  g.spec.box1 = ControlBox{-0.1, 0.1};
  const AdjointPair adj = solve_adjoint(g.spec, 1, 10.0 * g.spec.xi, g.grid, kSteps);
  const ControlTrajectory u = optimal_control(g.spec, 1, adj, g.grid);
  EXPECT_TRUE(u.any_clipped());
  EXPECT_LE(u.u.cwiseAbs().maxCoeff(), 0.1);
}

TEST(Convolution, ZeroTerminalGivesZero) {
  HeatGame g;
  EXPECT_EQ(gaussian_convolution_control(g.spec, 1, Eigen::VectorXd::Zero(161), 0.3, g.grid), 0.0);
}

TEST(Convolution, AgreesWithTheAdjointRoute) {
  HeatGame g;
  g.grid = WeightedGrid(-8.0, 8.0, 401, g.spec.field);
  g.spec = heat_game_spec(g.grid);
  const Eigen::VectorXd phi = g.spec.gamma3 * g.spec.xi;
  const AdjointPair adj = solve_adjoint(g.spec, 2, g.spec.xi, g.grid, 200);
  const ControlTrajectory u = optimal_control(g.spec, 2, adj, g.grid);
  for (Eigen::Index n : {0, 100, 190}) {
    const double conv = gaussian_convolution_control(g.spec, 2, phi, n / 200.0, g.grid);
    EXPECT_LE(std::abs(conv - u.u(n)), 2e-3 * u.u.cwiseAbs().maxCoeff());
  }
}

TEST(Convolution, ShortTimeLimitIsTheL2Pairing) {
  HeatGame g;
  const double near = gaussian_convolution_control(g.spec, 1, g.spec.xi, 1.0 - 1e-6, g.grid);
  const double limit = -l2_inner_product(g.spec.xi, g.spec.alpha1, g.grid) / g.spec.gamma1;
  // The hat quadrature smooths the kinks of the interpolant: O(sqrt(tau) h).
  EXPECT_NEAR(near, limit, 1e-3 * std::abs(limit));
  EXPECT_EQ(gaussian_convolution_control(g.spec, 1, g.spec.xi, 1.0, g.grid), limit);
}

TEST(Stationarity, OwnControlsAreStationary) {
  HeatGame g;
  const AdjointPair a1 = solve_adjoint(g.spec, 1, g.spec.xi, g.grid, kSteps);
  const AdjointPair a2 = solve_adjoint(g.spec, 2, g.spec.xi, g.grid, kSteps);
  ControlPair u{optimal_control(g.spec, 1, a1, g.grid).u, optimal_control(g.spec, 2, a2, g.grid).u};
  const auto [r1, r2] = stationarity_residual(g.spec, u, a1, a2, g.grid);
  EXPECT_LT(r1, 1e-15);
  EXPECT_LT(r2, 1e-15);

  const double delta = 0.01;
  u.u2(7) += delta;
  const auto [s1, s2] = stationarity_residual(g.spec, u, a1, a2, g.grid);
  EXPECT_LT(s1, 1e-15);
  EXPECT_NEAR(s2, g.spec.gamma2 * delta, 1e-14);
}

TEST(Stationarity, RandomControlsMatchTheHandComputedResidual) {
  HeatGame g;
  const AdjointPair a1 = solve_adjoint(g.spec, 1, g.spec.xi, g.grid, kSteps);
  const AdjointPair a2 = solve_adjoint(g.spec, 2, g.spec.xi, g.grid, kSteps);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ControlPair u = ControlPair::zero(kSteps);
  for (Eigen::Index n = 0; n <= kSteps; ++n) u.u1(n) = U(rng), u.u2(n) = U(rng);
  double h1 = 0.0, h2 = 0.0;
  for (Eigen::Index n = 0; n <= kSteps; ++n) {
    double p1 = 0.0, p2 = 0.0;
    for (Eigen::Index j = 0; j < 161; ++j) {
      const double c = (j == 0 || j == 160 ? 0.5 : 1.0) * g.grid.spacing() / g.spec.field.rho(g.grid.node(j));
      p1 += a1.p(n, j) * g.spec.alpha1(j) * c;
      p2 += a2.p(n, j) * g.spec.alpha2(j) * c;
    }
    h1 = std::max(h1, std::abs(p1 + g.spec.gamma1 * u.u1(n)));
    h2 = std::max(h2, std::abs(p2 + g.spec.gamma2 * u.u2(n)));
  }
  const auto [r1, r2] = stationarity_residual(g.spec, u, a1, a2, g.grid);
  EXPECT_NEAR(r1, h1, 1e-12);
  EXPECT_NEAR(r2, h2, 1e-12);
}

TEST(Cost, ZeroEverythingCostsNothing) {
  HeatGame g;
  g.spec.xi.setZero();
  g.spec.sigma0 = 0.0;
  const PathEnsemble e(3, kSteps, 1.0, 1);
  const ControlPair u = ControlPair::zero(kSteps);
  ForwardOptions opt;
  opt.record_steps = {kSteps};
  const ForwardSolution sol = simulate_forward(game_forward_problem(g.spec, g.grid), u, e, g.grid, opt);
  EXPECT_EQ(cost(g.spec, 1, u, sol, g.grid).J, 0.0);
}

TEST(Cost, ConstantControlRunningCost) {
  HeatGame g;
  g.spec.xi.setZero();
  g.spec.alpha1.setZero();
  g.spec.sigma0 = 0.0;
  const PathEnsemble e(1, kSteps, 1.0, 1);
  ControlPair u = ControlPair::zero(kSteps);
  u.u1.setConstant(0.8);
  ForwardOptions opt;
  opt.record_steps = {kSteps};
  const ForwardSolution sol = simulate_forward(game_forward_problem(g.spec, g.grid), u, e, g.grid, opt);
  EXPECT_NEAR(cost(g.spec, 1, u, sol, g.grid).J, 0.5 * g.spec.gamma1 * 0.64, 1e-14);
}

TEST(Convexity, Certificate) {
  GameSpec spec;
  spec.gamma1 = spec.gamma2 = spec.gamma3 = 1.0;
  EXPECT_TRUE(convexity_certificate(spec).pass);
  EXPECT_FALSE(convexity_certificate(spec).ill_conditioned);
  spec.gamma1 = 1e-9;
  EXPECT_TRUE(convexity_certificate(spec).pass);
  EXPECT_TRUE(convexity_certificate(spec).ill_conditioned);
}

TEST(Convexity, ZeroControlWeightIsRejected) {
  HeatGame g;
  g.spec.gamma1 = 0.0;
  EXPECT_THROW(validate_game_spec(g.spec, g.grid), std::invalid_argument);
  EXPECT_THROW(solve_equilibrium(g.spec, g.grid, PathEnsemble(2, kSteps, 1.0, 1)), std::invalid_argument);
}

TEST(Equilibrium, IsStationaryAndBeatsZeroControls) {
  HeatGame g;
  const PathEnsemble e(200, kSteps, 1.0, 42);
  const Equilibrium eq = solve_equilibrium(g.spec, g.grid, e);
  EXPECT_LT(std::max(eq.r1, eq.r2), 1e-10);
  const ControlPair zero = ControlPair::zero(kSteps);
  ForwardOptions opt;
  opt.record_steps = {kSteps};
  const ForwardSolution idle = simulate_forward(game_forward_problem(g.spec, g.grid), zero, e, g.grid, opt);
  for (int player : {1, 2})
    EXPECT_LT(cost(g.spec, player, eq.controls, eq.forward, g.grid).J, cost(g.spec, player, zero, idle, g.grid).J);
}

TEST(Equilibrium, HeavierControlWeightShrinksTheControl) {
  HeatGame g;
  const PathEnsemble e(50, kSteps, 1.0, 42);
  const Equilibrium base = solve_equilibrium(g.spec, g.grid, e);
  g.spec.gamma1 *= 10.0;
  const Equilibrium heavy = solve_equilibrium(g.spec, g.grid, e);
  EXPECT_LT(heavy.controls.u1.norm(), base.controls.u1.norm());
}

TEST(Equilibrium, BoxesAreRespected) {
  HeatGame g;
  g.spec.box1 = ControlBox{-0.2, 0.2};
  const Equilibrium eq = solve_equilibrium(g.spec, g.grid, PathEnsemble(20, kSteps, 1.0, 3));
  EXPECT_TRUE(eq.clipped);
  EXPECT_LE(eq.controls.u1.cwiseAbs().maxCoeff(), 0.2 + 1e-15);
  EXPECT_LT(std::max(eq.r1, eq.r2), 1e-8);
}

TEST(Deviation, SameControlsSameSeedGiveZeroChange) {
  HeatGame g;
  const PathEnsemble e(100, kSteps, 1.0, 42);
  const Equilibrium eq = solve_equilibrium(g.spec, g.grid, e);
  ForwardOptions opt;
  opt.record_steps = {kSteps};
  const ForwardSolution again = simulate_forward(game_forward_problem(g.spec, g.grid), eq.controls, e, g.grid, opt);
  const Eigen::VectorXd diff = path_costs(g.spec, 1, eq.controls, again, g.grid) -
                               path_costs(g.spec, 1, eq.controls, eq.forward, g.grid);
  EXPECT_EQ(diff.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Deviation, UnilateralDeviationsDoNotPay) {
  HeatGame g;
  const PathEnsemble e(500, kSteps, 1.0, 42);
  const Equilibrium eq = solve_equilibrium(g.spec, g.grid, e);
  const auto dirs = random_directions(2, kSteps, 42);
  const DeviationReport r = nash_deviation_test(g.spec, eq, e, dirs, {-0.4, -0.2, -0.1, 0.1, 0.2, 0.4}, g.grid);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.records.size(), 24u);
  EXPECT_GE(r.min_curvature, 0.0);
  EXPECT_LE(r.max_abs_vertex, 0.05);
  std::ostringstream out;
  write_deviation_csv(out, r);
  EXPECT_EQ(out.str().substr(0, 46), "player,direction,amplitude,delta_J,std_error,p");
}

TEST(Deviation, DirectionsAreBoundedAndReproducible) {
  const auto a = random_directions(8, 100, 5);
  const auto b = random_directions(8, 100, 5);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k], b[k]);
    EXPECT_EQ(a[k].size(), 101);
    EXPECT_NEAR(a[k].cwiseAbs().maxCoeff(), 1.0, 1e-15);
  }
}
