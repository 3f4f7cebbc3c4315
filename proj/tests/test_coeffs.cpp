#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hetspde/coeffs.hpp"

using namespace hetspde;

namespace {

CoefficientField two_phase(double a_plus, double b = 0.0) {
  PiecewiseConstantCoefficients p;
  p.a_plus = a_plus;
  p.b_minus = p.b_plus = b;
  return CoefficientField::piecewise(p);
}

}  // namespace

TEST(Hypothesis, UnitPhasesInsideBoundsAreAccepted) {
  const auto report = validate_hypothesis(two_phase(1.0), {0.5, 2.0}, uniform_probes(-5.0, 5.0, 101));
  EXPECT_TRUE(report.accepted());
}

TEST(Hypothesis, ExcessiveDiffusivityFlagsEveryPositiveProbe) {
  const auto probes = uniform_probes(-5.0, 5.0, 100);
  const auto report = validate_hypothesis(two_phase(3.0), {0.5, 2.0}, probes);
  const auto positive = std::count_if(probes.begin(), probes.end(), [](double x) { return x > 0.0; });
  ASSERT_EQ(static_cast<long>(report.violations.size()), positive);
  for (const Violation& v : report.violations) {
    EXPECT_GT(v.x, 0.0);
    EXPECT_EQ(v.quantity, "a");
    EXPECT_DOUBLE_EQ(v.value, 3.0);
  }
}

TEST(Hypothesis, SinusoidalDiffusivityIsAccepted) {
  SmoothCoefficients s;
  s.rho = [](double) { return 1.0; };
  s.a = [](double x) { return 1.0 + 0.5 * std::sin(x); };
  s.b = [](double) { return 0.0; };
  const auto field = CoefficientField::smooth(s);
  const auto probes = uniform_probes(-10.0, 10.0, 1000);
  // Independent range of the samples: [0.5, 1.5] lies inside [0.4, 1.6].
  double lo = 1e9, hi = -1e9;
  for (double x : probes) {
    lo = std::min(lo, 1.0 + 0.5 * std::sin(x));
    hi = std::max(hi, 1.0 + 0.5 * std::sin(x));
  }
  ASSERT_GE(lo, 0.4);
  ASSERT_LE(hi, 1.6);
  EXPECT_TRUE(validate_hypothesis(field, {0.4, 1.6}, probes).accepted());
  EXPECT_FALSE(validate_hypothesis(field, {0.6, 1.6}, probes).accepted());
}

TEST(Hypothesis, RejectsMalformedInput) {
  EXPECT_THROW(EllipticityBounds(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(EllipticityBounds(2.0, 1.0), std::invalid_argument);
  EXPECT_THROW(validate_hypothesis(two_phase(1.0), {0.5, 2.0}, {}), std::invalid_argument);
  SmoothCoefficients s;
  s.rho = [](double) { return 1.0; };
  s.a = [](double x) { return std::log(x); };
  s.b = [](double) { return 0.0; };
  EXPECT_THROW(validate_hypothesis(CoefficientField::smooth(s), {0.5, 2.0}, {-1.0}), std::domain_error);
}

TEST(Sampling, PiecewiseFieldIsClosedLeftAtTheInterface) {
  const auto field = two_phase(3.0);
  EXPECT_DOUBLE_EQ(field.a(-1.0), 1.0);
  EXPECT_DOUBLE_EQ(field.a(0.0), 1.0);
  EXPECT_DOUBLE_EQ(field.a(1e-12), 3.0);
  EXPECT_DOUBLE_EQ(field.a(2.0), 3.0);
}

TEST(Sampling, SmoothFieldEvaluatesItsCallables) {
  SmoothCoefficients s;
  s.rho = [](double x) { return 1.0 + x * x; };
  s.a = [](double x) { return 2.0 + std::cos(x); };
  s.b = [](double x) { return 0.1 * x; };
  const auto field = CoefficientField::smooth(s);
  for (double x : {-2.0, -0.3, 0.0, 1.7}) {
    const CoefficientSample c = field.sample(x);
    EXPECT_DOUBLE_EQ(c.rho, 1.0 + x * x);
    EXPECT_DOUBLE_EQ(c.a, 2.0 + std::cos(x));
    EXPECT_DOUBLE_EQ(c.b, 0.1 * x);
    EXPECT_DOUBLE_EQ(field.kappa(x), 0.5 * c.rho * c.a);
    EXPECT_DOUBLE_EQ(field.sigma(x), std::sqrt(c.rho * c.a));
  }
  EXPECT_NEAR(field.a_prime(0.4), -std::sin(0.4), 1e-8);
}

TEST(Sampling, ConstantValuesDetection) {
  EXPECT_TRUE(CoefficientField::constant(1.0, 2.0, 0.3).constant_values().has_value());
  EXPECT_TRUE(two_phase(1.0).constant_values().has_value());
  EXPECT_FALSE(two_phase(3.0).constant_values().has_value());
  EXPECT_THROW(CoefficientField::constant(1.0, 1.0, 0.0).phases(), UnsupportedKind);
}

TEST(Interface, NoDiffusivityJumpGivesZeroCa) {
  EXPECT_DOUBLE_EQ(interface_coefficients(two_phase(1.0, 0.4)).c_a, 0.0);
}

TEST(Interface, DiffusivityJumpFromOneToThree) {
  EXPECT_DOUBLE_EQ(interface_coefficients(two_phase(3.0)).c_a, 1.0);
}

TEST(Interface, EqualDriftsGiveMinusTwiceTheDrift) {
  const double b0 = 0.35;
  EXPECT_DOUBLE_EQ(interface_coefficients(two_phase(1.0, b0)).c_b, -2.0 * b0);
  // The dual weight vanishes when nothing jumps.
  EXPECT_DOUBLE_EQ(dual_interface_coefficients(two_phase(1.0, b0)).c_b, 0.0);
}

TEST(Interface, SmoothFieldHasNoInterface) {
  EXPECT_THROW(interface_coefficients(CoefficientField::constant(1.0, 1.0, 0.0)), UnsupportedKind);
}
