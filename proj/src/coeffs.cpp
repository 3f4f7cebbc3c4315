#include "hetspde/coeffs.hpp"

#include <cmath>
#include <limits>

namespace hetspde {

EllipticityBounds::EllipticityBounds(double lower, double upper) : lambda(lower), Lambda(upper) {
  if (!(lower > 0.0) || !(upper >= lower) || !std::isfinite(upper))
    throw std::invalid_argument("ellipticity bounds require 0 < lambda <= Lambda");
}

CoefficientField CoefficientField::piecewise(const PiecewiseConstantCoefficients& phases) {
  const double values[] = {phases.rho_minus, phases.rho_plus, phases.a_minus, phases.a_plus};
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("piecewise field: rho and a must be positive and finite on both sides");
  if (!std::isfinite(phases.b_minus) || !std::isfinite(phases.b_plus))
    throw std::invalid_argument("piecewise field: drift must be finite");
  CoefficientField field;
  field.kind_ = FieldKind::kPiecewiseConstant;
  field.phases_ = phases;
  if (phases.rho_minus == phases.rho_plus && phases.a_minus == phases.a_plus && phases.b_minus == phases.b_plus)
    field.constant_ = CoefficientSample{phases.rho_minus, phases.a_minus, phases.b_minus};
  return field;
}

CoefficientField CoefficientField::smooth(SmoothCoefficients coefficients) {
  if (!coefficients.rho || !coefficients.a || !coefficients.b)
    throw std::invalid_argument("smooth field: rho, a and b callables are required");
  CoefficientField field;
  field.kind_ = FieldKind::kSmooth;
  field.smooth_ = std::move(coefficients);
  return field;
}

CoefficientField CoefficientField::constant(double rho, double a, double b) {
  if (!(rho > 0.0) || !(a > 0.0) || !std::isfinite(rho) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("constant field: rho, a must be positive and b finite");
  CoefficientField field = smooth({[rho](double) { return rho; }, [a](double) { return a; },
                                   [b](double) { return b; }, [](double) { return 0.0; }});
  field.constant_ = CoefficientSample{rho, a, b};
  return field;
}

CoefficientSample CoefficientField::sample(double x) const {
  if (kind_ == FieldKind::kPiecewiseConstant) {
    if (x <= 0.0) return {phases_.rho_minus, phases_.a_minus, phases_.b_minus};
    return {phases_.rho_plus, phases_.a_plus, phases_.b_plus};
  }
  return {smooth_.rho(x), smooth_.a(x), smooth_.b(x)};
}

double CoefficientField::kappa(double x) const {
  const CoefficientSample s = sample(x);
  return 0.5 * s.rho * s.a;
}

double CoefficientField::sigma(double x) const {
  const CoefficientSample s = sample(x);
  return std::sqrt(s.rho * s.a);
}

double CoefficientField::a_prime(double x) const {
  if (kind_ == FieldKind::kPiecewiseConstant) return 0.0;
  if (smooth_.a_prime) return smooth_.a_prime(x);
  const double d = derivative_step(x);
  return (smooth_.a(x + d) - smooth_.a(x - d)) / (2.0 * d);
}

double CoefficientField::drift_over_density_prime(double x) const {
  if (kind_ == FieldKind::kPiecewiseConstant) return 0.0;
  const double d = derivative_step(x);
  const double right = smooth_.b(x + d) / smooth_.rho(x + d);
  const double left = smooth_.b(x - d) / smooth_.rho(x - d);
  return (right - left) / (2.0 * d);
}

std::optional<CoefficientSample> CoefficientField::constant_values() const { return constant_; }

const PiecewiseConstantCoefficients& CoefficientField::phases() const {
  if (kind_ != FieldKind::kPiecewiseConstant) throw UnsupportedKind("field is not piecewise constant");
  return phases_;
}

ValidationReport validate_hypothesis(const CoefficientField& field, const EllipticityBounds& bounds,
                                     const std::vector<double>& probe_points) {
  if (probe_points.empty()) throw std::invalid_argument("validate_hypothesis: no probe points");
  ValidationReport report;
  for (double x : probe_points) {
    if (!std::isfinite(x)) throw std::invalid_argument("validate_hypothesis: non-finite probe point");
    const CoefficientSample s = field.sample(x);
    if (!std::isfinite(s.rho) || !std::isfinite(s.a) || !std::isfinite(s.b))
      throw std::domain_error("non-finite coefficient sample at x = " + std::to_string(x));
    if (s.rho < bounds.lambda || s.rho > bounds.Lambda) report.violations.push_back({x, "rho", s.rho});
    if (s.a < bounds.lambda || s.a > bounds.Lambda) report.violations.push_back({x, "a", s.a});
    if (std::abs(s.b) > bounds.Lambda) report.violations.push_back({x, "b", s.b});
  }
  return report;
}

std::vector<double> uniform_probes(double x_min, double x_max, int count) {
  if (count < 2 || !(x_max > x_min)) throw std::invalid_argument("uniform_probes: need count >= 2 and x_max > x_min");
  std::vector<double> probes(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) probes[i] = x_min + (x_max - x_min) * i / (count - 1);
  return probes;
}

EllipticityBounds infer_bounds(const CoefficientField& field, const std::vector<double>& probe_points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double x : probe_points) {
    const CoefficientSample s = field.sample(x);
    lo = std::min({lo, s.rho, s.a});
    hi = std::max({hi, s.rho, s.a, std::abs(s.b)});
  }
  return EllipticityBounds(lo, hi);
}

InterfaceCoefficients interface_coefficients(const CoefficientField& field) {
  if (!field.is_piecewise()) throw UnsupportedKind("interface coefficients need a piecewise-constant field");
  const auto& p = field.phases();
  return {p.rho_minus * (p.a_plus - p.a_minus) / 2.0, -(p.rho_minus / p.rho_plus * p.b_plus + p.b_minus)};
}

InterfaceCoefficients dual_interface_coefficients(const CoefficientField& field) {
  if (!field.is_piecewise()) throw UnsupportedKind("interface coefficients need a piecewise-constant field");
  const auto& p = field.phases();
  return {p.rho_minus * (p.a_plus - p.a_minus) / 2.0, -(p.rho_minus / p.rho_plus * p.b_plus - p.b_minus)};
}

}  // namespace hetspde
