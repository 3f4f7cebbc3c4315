#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hetspde/forward.hpp"
#include "hetspde/game.hpp"
#include "hetspde/random.hpp"

using namespace hetspde;

namespace {

const CoefficientField kHeat = CoefficientField::constant(1.0, 1.0, 0.3);

Eigen::VectorXd bump(const WeightedGrid& grid, double center, double width, double height = 1.0) {
  return sample_on(grid,
                   [=](double x) { return height * std::exp(-(x - center) * (x - center) / (2 * width * width)); });
}

ForwardProblem additive_problem(const WeightedGrid& grid, const Eigen::VectorXd& xi, const Eigen::VectorXd& noise,
                                double horizon) {
  ForwardProblem p;
  p.field = kHeat;
  p.xi = xi;
  p.noise = StateCoefficient::profile(noise);
  p.horizon = horizon;
  (void)grid;
  return p;
}

}  // namespace

TEST(Random, StreamsAreReproducibleAndIndependentOfOrder) {
  const PathEnsemble e(10, 50, 1.0, 42);
  const Eigen::VectorXd late = e.increments(7);
  const Eigen::VectorXd early = e.increments(2);
  EXPECT_EQ(e.increments(7), late);
  EXPECT_EQ(e.increments(2), early);
  EXPECT_NE(early, late);
  EXPECT_NE(PathEnsemble(10, 50, 1.0, 43).increments(2), early);
  EXPECT_EQ(late.size(), 50);
}

TEST(Random, IncrementsHaveVarianceDt) {
  const PathEnsemble e(400, 100, 2.0, 7);
  double sum = 0.0, sq = 0.0;
  for (std::int64_t p = 0; p < e.n_paths(); ++p) {
    const Eigen::VectorXd d = e.increments(p);
    sum += d.sum();
    sq += d.squaredNorm();
  }
  const double count = 400.0 * 100.0;
  EXPECT_NEAR(sum / count, 0.0, 4.0 * std::sqrt(0.02 / count));
  // Var of the sample variance of N(0, dt) is 2 dt^2 / count.
  EXPECT_NEAR(sq / count, 0.02, 4.0 * std::sqrt(2.0 / count) * 0.02);
}

TEST(Forward, ConstantStateStaysConstantInTheInterior) {
  const auto field = CoefficientField::constant(1.0, 1.3, 0.0);
  const WeightedGrid grid(-3.0, 3.0, 61, field);
  ForwardProblem p;
  p.field = field;
  p.xi = Eigen::VectorXd::Constant(61, 2.5);
  const PathEnsemble e(3, 40, 1.0, 1);
  const ForwardSolution sol = simulate_forward(p, ControlPair::zero(40), e, grid);
  for (const Eigen::MatrixXd& path : sol.paths)
    EXPECT_LT((path.array() - 2.5).abs().maxCoeff(), 1e-12);
}

TEST(Forward, AdditiveNoiseIntegratesExactlyWithoutTheOperator) {
  const WeightedGrid grid(-2.0, 2.0, 21, kHeat);
  const double sigma0 = 0.4;
  ForwardProblem p = additive_problem(grid, bump(grid, 0.0, 0.5), Eigen::VectorXd::Constant(21, sigma0), 1.0);
  p.disable_operator = true;
  const PathEnsemble e(5, 64, 1.0, 9);
  const ForwardSolution sol = simulate_forward(p, ControlPair::zero(64), e, grid);
  for (std::int64_t path = 0; path < 5; ++path) {
    const Eigen::VectorXd dB = e.increments(path);
    double B = 0.0;
    for (std::int64_t n = 0; n <= 64; ++n) {
      const Eigen::VectorXd expected = p.xi.array() + sigma0 * B;
      EXPECT_LT((sol.paths[path].row(n).transpose() - expected).cwiseAbs().maxCoeff(), 1e-13);
      if (n < 64) B += dB(n);
    }
  }
}

TEST(Forward, HeatExampleMeanMatchesTheDeterministicSolve) {
  const WeightedGrid grid(-8.0, 8.0, 161, kHeat);
  const Eigen::VectorXd xi = bump(grid, 0.0, 1.0, 2.0);
  const std::int64_t N = 100;
  const ForwardProblem noisy = additive_problem(grid, xi, Eigen::VectorXd::Constant(161, 0.2), 1.0);
  ForwardProblem quiet = noisy;
  quiet.noise = StateCoefficient::zero();
  ForwardOptions opt;
  opt.record_steps = {N / 2, N};
  opt.keep_paths = false;
  const ForwardSolution mc = simulate_forward(noisy, ControlPair::zero(N), PathEnsemble(400, N, 1.0, 42), grid, opt);
  const ForwardSolution det = simulate_forward(quiet, ControlPair::zero(N), PathEnsemble(1, N, 1.0, 42), grid, opt);
  const double stderr_max = (mc.variance.array() / 400.0).sqrt().maxCoeff();
  EXPECT_GT(stderr_max, 0.0);
  EXPECT_LE((mc.mean - det.mean).cwiseAbs().maxCoeff(), 3.0 * stderr_max);
  EXPECT_EQ(det.variance.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, ControlsEnterThroughTheActuators) {
  const WeightedGrid grid(-4.0, 4.0, 81, kHeat);
  ForwardProblem p;
  p.field = kHeat;
  p.xi = Eigen::VectorXd::Zero(81);
  p.drift = StateCoefficient::actuated(bump(grid, -1.0, 0.5), bump(grid, 1.0, 0.5));
  ControlPair u = ControlPair::zero(20);
  u.u1.setConstant(1.0);
  const ForwardSolution sol = simulate_forward(p, u, PathEnsemble(1, 20, 1.0, 3), grid);
  const Eigen::VectorXd last = sol.mean.row(20).transpose();
  EXPECT_GT(last(30), last(50));  // mass injected on the left
  EXPECT_GT(last.minCoeff(), -1e-12);
}

TEST(Forward, RecordsOnlyRequestedSlicesAndWritesCsv) {
  const WeightedGrid grid(-1.0, 1.0, 5, kHeat);
  ForwardProblem p;
  p.field = kHeat;
  p.xi = Eigen::VectorXd::Ones(5);
  ForwardOptions opt;
  opt.record_steps = {0, 4};
  const ForwardSolution sol = simulate_forward(p, ControlPair::zero(4), PathEnsemble(2, 4, 1.0, 3), grid, opt);
  EXPECT_EQ(sol.mean.rows(), 2);
  std::ostringstream out;
  write_forward_stats_csv(out, sol, grid);
  EXPECT_EQ(out.str().substr(0, 15), "t,x,mean,var\n0,");
  std::ostringstream paths;
  write_forward_paths_csv(paths, sol, grid, 1);
  EXPECT_EQ(paths.str().substr(0, 11), "path,t,x,y\n");
}

TEST(Forward, RejectsMismatchedInputs) {
  const WeightedGrid grid(-1.0, 1.0, 5, kHeat);
  ForwardProblem p;
  p.field = kHeat;
  p.xi = Eigen::VectorXd::Ones(4);
  EXPECT_THROW(simulate_forward(p, ControlPair::zero(4), PathEnsemble(1, 4, 1.0, 1), grid), GridError);
}

TEST(Picard, StateIndependentCoefficientsConvergeInOneStep) {
  const WeightedGrid grid(-4.0, 4.0, 41, kHeat);
  const ForwardProblem p = additive_problem(grid, bump(grid, 0.0, 1.0), bump(grid, 0.5, 1.0, 0.3), 0.2);
  const PicardResult r = picard_iterate(p, PathEnsemble(20, 40, 0.2, 5), grid, 4);
  ASSERT_EQ(r.increment_norms.size(), 4u);
  EXPECT_GT(r.increment_norms[0], 0.0);
  EXPECT_EQ(r.increment_norms[1], 0.0);
  EXPECT_TRUE(r.exact_convergence());
  EXPECT_EQ(r.ratios[0], 0.0);
}

namespace {

PicardResult tanh_picard(double window) {
  const WeightedGrid grid(-6.0, 6.0, 121, kHeat);
  ForwardProblem p;
  p.field = kHeat;
  p.xi = bump(grid, 0.0, 1.0, 2.0);
  p.drift = StateCoefficient::pointwise([](double, double, double y, double, double) { return std::tanh(y); });
  p.noise = StateCoefficient::profile(Eigen::VectorXd::Constant(121, 0.1));
  p.horizon = window;
  const auto steps = static_cast<std::int64_t>(std::llround(window / 0.005));
  return picard_iterate(p, PathEnsemble(50, steps, window, 17), grid, 6);
}

}  // namespace

TEST(Picard, TanhDriftContractsAndSlowsWithTheWindow) {
  const PicardResult small = tanh_picard(0.1);
  const PicardResult large = tanh_picard(0.2);
  for (std::size_t k = 0; k < small.ratios.size(); ++k) {
    EXPECT_LT(small.ratios[k], 1.0);
    // The first increment is dominated by the noise integral, so monotonicity
    // is asserted from the second ratio on.
    if (k > 1 && !small.exact[k]) EXPECT_LE(small.ratios[k], small.ratios[k - 1]);
  }
  EXPECT_GT(large.ratios[0], small.ratios[0]);
}

TEST(Picard, DeclaredBound) {
  ForwardProblem p;
  p.lipschitz = 1.0;
  p.semigroup_bound = 1.0;
  EXPECT_DOUBLE_EQ(picard_bound(p, 0.1), 2.0 * (0.01 + 0.4));
}

TEST(MildResidual, ZeroProblemHasZeroResidual) {
  const WeightedGrid grid(-4.0, 4.0, 41, kHeat);
  ForwardProblem p;
  p.field = kHeat;
  p.xi = Eigen::VectorXd::Zero(41);
  const PathEnsemble e(3, 10, 1.0, 2);
  const ForwardSolution sol = simulate_forward(p, ControlPair::zero(10), e, grid);
  EXPECT_EQ(mild_residual(sol, p, e, grid, gaussian_provider(kHeat, grid), {1, 5, 10}), 0.0);
}

namespace {

double deterministic_residual(std::int64_t steps, Eigen::Index n) {
  const WeightedGrid grid(-10.0, 10.0, n, kHeat);
  ForwardProblem p;
  p.field = kHeat;
  p.xi = bump(grid, 0.0, 1.0);
  const PathEnsemble e(1, steps, 1.0, 2);
  const ForwardSolution sol = simulate_forward(p, ControlPair::zero(steps), e, grid);
  return mild_residual(sol, p, e, grid, gaussian_provider(kHeat, grid), {steps});
}

double noise_residual(std::int64_t steps) {
  const WeightedGrid grid(-8.0, 8.0, 161, kHeat);
  const ForwardProblem p = additive_problem(grid, Eigen::VectorXd::Zero(161), bump(grid, 0.0, 0.5, 0.5), 1.0);
  const PathEnsemble e(20, steps, 1.0, 4);
  const ForwardSolution sol = simulate_forward(p, ControlPair::zero(steps), e, grid);
  return mild_residual(sol, p, e, grid, gaussian_provider(kHeat, grid), {steps});
}

}  // namespace

TEST(MildResidual, DeterministicPartConvergesWithTheTimeStep) {
  const double r1 = deterministic_residual(10, 401);
  const double r2 = deterministic_residual(20, 401);
  const double r3 = deterministic_residual(40, 401);
  EXPECT_LT(r2, r1);
  EXPECT_LT(r3, r2);
  EXPECT_GT(std::log2(r1 / r3) / 2.0, 0.8);
}

TEST(MildResidual, NoiseQuadratureIsAtLeastHalfOrder) {
  const double r1 = noise_residual(25);
  const double r2 = noise_residual(50);
  const double r3 = noise_residual(100);
  EXPECT_GT(std::log2(r1 / r3) / 2.0, 0.45);
}
