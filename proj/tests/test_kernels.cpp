#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hetspde/kernels.hpp"
#include "hetspde/quadrature.hpp"

using namespace hetspde;

namespace {

CoefficientField two_phase(double a_plus, double b_minus, double b_plus) {
  PiecewiseConstantCoefficients p;
  p.a_plus = a_plus;
  p.b_minus = b_minus;
  p.b_plus = b_plus;
  return CoefficientField::piecewise(p);
}

}  // namespace

TEST(GaussianDensity, StandardNormalPeak) {
  EXPECT_NEAR(gaussian_density(1.0, 0.0, 1.0, 0.3, 0.3), 0.3989422804014327, 1e-15);
}

TEST(GaussianDensity, DriftShiftsTheMean) {
  // N(x - beta tau, sigma^2 tau) = N(-0.5, 0.25): the density at y = -0.5 is the peak.
  const double peak = 1.0 / std::sqrt(2 * std::numbers::pi * 0.25);
  EXPECT_NEAR(gaussian_density(1.0, 2.0, 0.25, 0.0, -0.5), peak, 1e-15);
  EXPECT_NEAR(peak, 0.797885, 1e-6);
  EXPECT_LT(gaussian_density(1.0, 2.0, 0.25, 0.0, -0.4), peak);
}

TEST(GaussianDensity, IntegratesToOne) {
  const auto [z, w] = gauss_legendre<double>(200);
  for (auto [sigma, drift, tau, x] : {std::tuple{1.0, 0.0, 1.0, 0.0}, std::tuple{0.4, 1.5, 0.3, -2.0},
                                      std::tuple{2.0, -0.7, 2.5, 1.0}}) {
    const double m = x - drift * tau;
    const double half = 8.0 * sigma * std::sqrt(tau);
    double total = 0.0;
    for (int k = 0; k < z.size(); ++k) total += half * w(k) * gaussian_density(sigma, drift, tau, x, m + half * z(k));
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
  EXPECT_THROW(gaussian_density(1.0, 0.0, 0.0, 0.0, 0.0), std::domain_error);
}

TEST(GaussianKernel, ConservesMass) {
  const WeightedGrid grid = WeightedGrid::unweighted(-8.0, 8.0, 161);
  const GaussianKernelParams params{0.9, 0.4};
  const Eigen::VectorXd out = apply_kernel(params, 0.7, Eigen::VectorXd::Ones(161), grid);
  EXPECT_LT((out.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(GaussianKernel, LinearDataGivesTheShiftedMean) {
  const WeightedGrid grid = WeightedGrid::unweighted(-10.0, 10.0, 201);
  const GaussianKernelParams params{1.0, 0.6};
  const double tau = 0.5;
  const Eigen::VectorXd out = apply_kernel(params, tau, grid.nodes(), grid);
  // Interior nodes, far from the constant continuation beyond the window.
  for (Eigen::Index i = 50; i <= 150; ++i) EXPECT_NEAR(out(i), grid.node(i) - params.drift * tau, 1e-9);
}

TEST(GaussianKernel, ShortTimeLimitIsTheIdentity) {
  const WeightedGrid grid = WeightedGrid::unweighted(-5.0, 5.0, 101);
  const Eigen::VectorXd g = sample_on(grid, [](double x) { return std::exp(-x * x) * std::cos(x); });
  const Eigen::VectorXd out = apply_kernel(GaussianKernelParams{1.0, 0.3}, 1e-6, g, grid);
  EXPECT_LT((out - g).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(GaussianKernel, SemigroupProperty) {
  const WeightedGrid grid = WeightedGrid::unweighted(-12.0, 12.0, 481);
  const GaussianKernelParams params{0.8, 0.2};
  const Eigen::VectorXd g = sample_on(grid, [](double x) { return std::exp(-x * x / 2); });
  const Eigen::VectorXd twice = apply_kernel(params, 0.3, apply_kernel(params, 0.2, g, grid), grid);
  const Eigen::VectorXd once = apply_kernel(params, 0.5, g, grid);
  EXPECT_LT((twice - once).cwiseAbs().maxCoeff(), 2e-3);
}

TEST(TwoPhaseKernel, DegenerateInterfaceMatchesTheGaussian) {
  const auto field = two_phase(1.0, 0.2, 0.2);
  const WeightedGrid grid(-8.0, 8.0, 801, field);
  const double tau = 0.5;
  const TwoPhaseKernel K = build_two_phase_kernel(field, 0.0, tau, grid, 200);
  const GaussianKernelParams params = GaussianKernelParams::girsanov(field, 0.0);
  double worst = 0.0;
  for (Eigen::Index i = 200; i <= 600; i += 5)
    for (Eigen::Index j = 200; j <= 600; j += 5)
      worst = std::max(worst, std::abs(K.density(i, j) - gaussian_density(params, tau, grid.node(i), grid.node(j))));
  EXPECT_LE(worst, 5e-3);
}

TEST(TwoPhaseKernel, RowsIntegrateToOneAwayFromTheBoundary) {
  const auto field = two_phase(3.0, 0.2, -0.1);
  const WeightedGrid grid(-8.0, 8.0, 401, field);
  const TwoPhaseKernel K = build_two_phase_kernel(field, 0.0, 0.5, grid, 200);
  const Eigen::VectorXd mass = K.density * grid.trapezoid();
  for (Eigen::Index i = 125; i <= 275; ++i) EXPECT_NEAR(mass(i), 1.0, 1e-4) << "row " << i;
  EXPECT_LT(K.clipped_mass.maxCoeff(), 1e-4);
}

TEST(TwoPhaseKernel, ShortTimeLimitConcentratesOnTheDiagonal) {
  const auto field = two_phase(3.0, 0.2, -0.1);
  const WeightedGrid grid(-2.0, 2.0, 41, field);
  const TwoPhaseKernel K = build_two_phase_kernel(field, 0.0, 1e-6, grid, 10);
  const double h = grid.spacing();
  for (Eigen::Index i = 1; i + 1 < grid.size(); ++i) {
    EXPECT_NEAR(K.density(i, i) * h, 1.0, 1e-3);
    EXPECT_LT(K.density(i, i + 1) * h, 1e-3);
  }
}

TEST(TwoPhaseKernel, RejectsSmoothFields) {
  const auto field = CoefficientField::constant(1.0, 1.0, 0.0);
  const WeightedGrid grid(-1.0, 1.0, 11, field);
  EXPECT_THROW(build_two_phase_kernel(field, 0.0, 0.1, grid, 10), UnsupportedKind);
}

TEST(AronsonBound, LooseConstantsHold) {
  const auto field = two_phase(1.0, 0.0, 0.0);  // sigma = 1
  const WeightedGrid grid(-6.0, 6.0, 241, field);
  const TwoPhaseKernel K = build_two_phase_kernel(field, 0.0, 0.5, grid, 100);
  const BoundReport report = aronson_bound_check(K, grid, 1.0, 0.25);
  EXPECT_TRUE(report.pass());
  EXPECT_LT(report.worst_ratio, 1.0);
}

TEST(AronsonBound, VacuousAndOverTightBoundsFlagViolations) {
  const auto field = two_phase(3.0, 0.0, 0.0);
  const WeightedGrid grid(-4.0, 4.0, 81, field);
  const TwoPhaseKernel K = build_two_phase_kernel(field, 0.0, 0.5, grid, 50);
  long positive = 0;
  for (Eigen::Index i = 1; i + 1 < grid.size(); ++i)
    for (Eigen::Index j = 1; j + 1 < grid.size(); ++j) positive += K.density(i, j) > 0.0;
  EXPECT_EQ(static_cast<long>(aronson_bound_check(K, grid, 0.0, 1.0).violations.size()), positive);

  const BoundReport tight = aronson_bound_check(K, grid, 1.0, 1e6);
  EXPECT_FALSE(tight.pass());
  for (auto [i, j] : tight.violations) EXPECT_NE(i, j);
}
