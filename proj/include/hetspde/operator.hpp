#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "hetspde/coeffs.hpp"
#include "hetspde/grid.hpp"
#include "hetspde/tridiagonal.hpp"

namespace hetspde {

enum class OperatorRealization { kForward, kAdjointSmooth, kAdjointPiecewise, kBackwardGenerator };

/// Boundary nodes carry zero operator rows: the operator never acts on them,
/// so they hold their (far-field) data and only local forcing moves them.
enum class BoundaryTreatment { kInertDirichletRows };

/// Which interface weights the piecewise adjoint uses (see coeffs.hpp).
enum class InterfaceConvention { kDual, kLiteral };

struct DiscreteOperator {
  Tridiagonal<double> matrix;
  OperatorRealization realization = OperatorRealization::kForward;
  BoundaryTreatment boundary = BoundaryTreatment::kInertDirichletRows;

  Eigen::Index size() const { return matrix.size(); }

  template <typename Derived>
  Eigen::VectorXd apply(const Eigen::MatrixBase<Derived>& phi) const {
    return matrix * phi;
  }
};

/// Divergence-form stencil of (rho/2)(a phi')' + b phi' with a sampled at
/// midpoints x_{j +- 1/2}.
DiscreteOperator assemble_operator(const CoefficientField& field, const WeightedGrid& grid);

/// Smooth fields: (rho/2)(a psi')' - b psi' - rho (b/rho)' psi.
/// Piecewise fields: (rho/2)(a psi')' - b psi' plus the interface Dirac term
/// (c_a psi'(0) + c_b psi(0)) delta_0 realised as a nodal mass at j0.
DiscreteOperator assemble_adjoint(const CoefficientField& field, const WeightedGrid& grid,
                                  InterfaceConvention convention = InterfaceConvention::kDual);

/// Girsanov-reduced generator kappa u_xx - (b + sigma gamma) u_x of the
/// backward problems. Smooth fields use kappa(x_j); piecewise fields use the
/// flux form with kappa at midpoints, which imposes kappa- u_x(0-) = kappa+ u_x(0+).
DiscreteOperator assemble_backward_generator(const CoefficientField& field, double gamma, const WeightedGrid& grid);

/// Coefficients (second, first) of the non-divergence form
/// (rho a / 2) phi'' + (rho a' / 2 + b) phi'.
struct NonDivergenceCoefficients {
  double second;
  double first;
};
NonDivergenceCoefficients non_divergence_coefficients(const CoefficientField& field, double x);

double adjoint_residual(const DiscreteOperator& A, const DiscreteOperator& A_star, const WeightedGrid& grid,
                        const Eigen::VectorXd& phi, const Eigen::VectorXd& psi);

struct CoercivityReport {
  std::vector<double> margins;
  std::vector<double> scales;
  double min_margin = 0.0;
  bool pass = true;
};

/// Default Garding constants: alpha = min(lambda^2/2, 1),
/// lambda0 = Lambda^2 C_rho / lambda^2 + 2 with C_rho = Lambda / lambda.
double coercivity_alpha(const EllipticityBounds& bounds);
double coercivity_lambda0(const EllipticityBounds& bounds);

CoercivityReport coercivity_check(const DiscreteOperator& A, const WeightedGrid& grid,
                                  const std::vector<Eigen::VectorXd>& trials, double lambda0, double alpha,
                                  double relative_tolerance = 1e-8);

/// (row, col, value) triples of the nonzero entries.
void write_operator_csv(std::ostream& out, const DiscreteOperator& op);

}  // namespace hetspde
