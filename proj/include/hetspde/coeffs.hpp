#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetspde {

/// Thrown when an operation is asked to handle a coefficient kind it does not
/// support (e.g. interface coefficients of a smooth field).
class UnsupportedKind : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FieldKind { kSmooth, kPiecewiseConstant };

struct CoefficientSample {
  double rho;
  double a;
  double b;
};

struct PiecewiseConstantCoefficients {
  double rho_minus = 1.0;
  double rho_plus = 1.0;
  double a_minus = 1.0;
  double a_plus = 1.0;
  double b_minus = 0.0;
  double b_plus = 0.0;
};

struct SmoothCoefficients {
  std::function<double(double)> rho;
  std::function<double(double)> a;
  std::function<double(double)> b;
  // Optional analytic a'(x); a central difference is used when absent.
  std::function<double(double)> a_prime;
};

struct EllipticityBounds {
  double lambda;
  double Lambda;

  EllipticityBounds(double lower, double upper);
};

struct InterfaceCoefficients {
  double c_a;
  double c_b;
};

struct Violation {
  double x;
  std::string quantity;  // "rho", "a" or "b"
  double value;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool accepted() const { return violations.empty(); }
};

/// The triple (rho, a, b) of the operator, either sampled from callables or
/// piecewise constant with a single interface at x = 0.
class CoefficientField {
 public:
  static CoefficientField piecewise(const PiecewiseConstantCoefficients& phases);
  static CoefficientField smooth(SmoothCoefficients coefficients);
  /// Smooth field with constant values; flagged as constant for closed forms.
  static CoefficientField constant(double rho, double a, double b);

  FieldKind kind() const { return kind_; }
  bool is_piecewise() const { return kind_ == FieldKind::kPiecewiseConstant; }

  /// Closed-left at the interface: x <= 0 belongs to the minus phase.
  CoefficientSample sample(double x) const;

  double rho(double x) const { return sample(x).rho; }
  double a(double x) const { return sample(x).a; }
  double b(double x) const { return sample(x).b; }
  double kappa(double x) const;  // rho a / 2
  double sigma(double x) const;  // sqrt(rho a)

  /// a'(x): analytic when supplied, otherwise central difference. Zero away
  /// from the interface for piecewise fields.
  double a_prime(double x) const;
  /// (b / rho)'(x) by central difference (exactly zero for constant fields).
  double drift_over_density_prime(double x) const;

  /// Values when the field is spatially constant (constant smooth field, or
  /// piecewise with identical phases).
  std::optional<CoefficientSample> constant_values() const;

  const PiecewiseConstantCoefficients& phases() const;

 private:
  FieldKind kind_ = FieldKind::kSmooth;
  PiecewiseConstantCoefficients phases_{};
  SmoothCoefficients smooth_{};
  std::optional<CoefficientSample> constant_{};
};

/// Central-difference step used for derivatives of sampled callables.
inline double derivative_step(double x) { return 1e-6 * std::max(1.0, x < 0 ? -x : x); }

inline CoefficientSample sample(const CoefficientField& field, double x) { return field.sample(x); }

ValidationReport validate_hypothesis(const CoefficientField& field, const EllipticityBounds& bounds,
                                     const std::vector<double>& probe_points);

/// Uniform probe points over [x_min, x_max] (default density of the validator).
std::vector<double> uniform_probes(double x_min, double x_max, int count = 10000);

/// Bounds read off the samples: lambda = min(rho, a), Lambda = max(rho, a, |b|).
EllipticityBounds infer_bounds(const CoefficientField& field, const std::vector<double>& probe_points);

/// Literal interface weights (the adjoint uses dual_interface_coefficients):
/// c_a = rho-(a+ - a-)/2, c_b = -(rho-/rho+ b+ + b-).
InterfaceCoefficients interface_coefficients(const CoefficientField& field);

/// Interface weights that make the discrete piecewise adjoint dual to the
/// operator: c_a as above, c_b = -(rho-/rho+ b+ - b-).
InterfaceCoefficients dual_interface_coefficients(const CoefficientField& field);

}  // namespace hetspde
