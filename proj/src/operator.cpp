#include "hetspde/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace hetspde {
namespace {

// Diffusion part rho_j/(2h^2) [a+ (phi_{j+1} - phi_j) - a- (phi_j - phi_{j-1})]
// plus a centred first-order term with coefficient `drift`.
void set_flux_row(Tridiagonal<double>& m, Eigen::Index j, double rho, double a_left, double a_right, double drift,
                  double h) {
  const double s = rho / (2.0 * h * h);
  m.lower()(j) = s * a_left - drift / (2.0 * h);
  m.upper()(j) = s * a_right + drift / (2.0 * h);
  m.diag()(j) = -s * (a_left + a_right);
}

void check_size(const WeightedGrid& grid) {
  if (grid.size() < 3) throw GridError("grid too small: need at least 3 nodes");
}

}  // namespace

DiscreteOperator assemble_operator(const CoefficientField& field, const WeightedGrid& grid) {
  check_size(grid);
  const Eigen::Index n = grid.size();
  const double h = grid.spacing();
  DiscreteOperator op{Tridiagonal<double>(n), OperatorRealization::kForward};
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    const double x = grid.node(j);
    const CoefficientSample s = field.sample(x);
    set_flux_row(op.matrix, j, s.rho, field.a(x - 0.5 * h), field.a(x + 0.5 * h), s.b, h);
  }
  return op;
}

DiscreteOperator assemble_adjoint(const CoefficientField& field, const WeightedGrid& grid,
                                  InterfaceConvention convention) {
  check_size(grid);
  const Eigen::Index n = grid.size();
  const double h = grid.spacing();
  if (!field.is_piecewise()) {
    DiscreteOperator op{Tridiagonal<double>(n), OperatorRealization::kAdjointSmooth};
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
      const double x = grid.node(j);
      const CoefficientSample s = field.sample(x);
      set_flux_row(op.matrix, j, s.rho, field.a(x - 0.5 * h), field.a(x + 0.5 * h), -s.b, h);
      op.matrix.diag()(j) -= s.rho * field.drift_over_density_prime(x);
    }
    return op;
  }

  const Eigen::Index j0 = *grid.interface_index();
  DiscreteOperator op{Tridiagonal<double>(n), OperatorRealization::kAdjointPiecewise};
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    if (j == j0) continue;
    const double x = grid.node(j);
    const CoefficientSample s = field.sample(x);
    set_flux_row(op.matrix, j, s.rho, field.a(x - 0.5 * h), field.a(x + 0.5 * h), -s.b, h);
  }
  const auto& p = field.phases();
  // Away from the interface the second-order part is the plain second
  // difference; at x = 0 the one-sided diffusivities average.
  const double a_bar = 0.5 * (p.a_minus + p.a_plus);
  set_flux_row(op.matrix, j0, p.rho_minus, a_bar, a_bar, -p.b_minus, h);
  double mass;
  InterfaceCoefficients c;
  if (convention == InterfaceConvention::kDual) {
    c = dual_interface_coefficients(field);
    mass = 1.0 / (p.rho_minus * grid.weights()(j0) * h);  // delta_0 paired with weight 1/rho(0)
  } else {
    c = interface_coefficients(field);
    mass = 1.0 / (grid.weights()(j0) * h);
  }
  op.matrix.lower()(j0) -= mass * c.c_a / (2.0 * h);
  op.matrix.upper()(j0) += mass * c.c_a / (2.0 * h);
  op.matrix.diag()(j0) += mass * c.c_b;
  return op;
}

DiscreteOperator assemble_backward_generator(const CoefficientField& field, double gamma, const WeightedGrid& grid) {
  check_size(grid);
  const Eigen::Index n = grid.size();
  const double h = grid.spacing();
  DiscreteOperator op{Tridiagonal<double>(n), OperatorRealization::kBackwardGenerator};
  const bool flux = field.is_piecewise();
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    const double x = grid.node(j);
    const double k_left = flux ? field.kappa(x - 0.5 * h) : field.kappa(x);
    const double k_right = flux ? field.kappa(x + 0.5 * h) : field.kappa(x);
    const double mu = field.b(x) + field.sigma(x) * gamma;
    op.matrix.lower()(j) = k_left / (h * h) + mu / (2.0 * h);
    op.matrix.upper()(j) = k_right / (h * h) - mu / (2.0 * h);
    op.matrix.diag()(j) = -(k_left + k_right) / (h * h);
  }
  return op;
}

NonDivergenceCoefficients non_divergence_coefficients(const CoefficientField& field, double x) {
  const CoefficientSample s = field.sample(x);
  return {0.5 * s.rho * s.a, 0.5 * s.rho * field.a_prime(x) + s.b};
}

double adjoint_residual(const DiscreteOperator& A, const DiscreteOperator& A_star, const WeightedGrid& grid,
                        const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) {
  grid.require_match(phi.size());
  grid.require_match(psi.size());
  return std::abs(inner_product(A.apply(phi), psi, grid) - inner_product(phi, A_star.apply(psi), grid));
}

double coercivity_alpha(const EllipticityBounds& bounds) {
  return std::min(bounds.lambda * bounds.lambda / 2.0, 1.0);
}

double coercivity_lambda0(const EllipticityBounds& bounds) {
  const double c_rho = bounds.Lambda / bounds.lambda;
  return bounds.Lambda * bounds.Lambda * c_rho / (bounds.lambda * bounds.lambda) + 2.0;
}

CoercivityReport coercivity_check(const DiscreteOperator& A, const WeightedGrid& grid,
                                  const std::vector<Eigen::VectorXd>& trials, double lambda0, double alpha,
                                  double relative_tolerance) {
  if (trials.empty()) throw std::invalid_argument("coercivity_check: empty trial list");
  CoercivityReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& u : trials) {
    const double form = inner_product(A.apply(u), u, grid);
    const double mass = inner_product(u, u, grid);
    const Eigen::VectorXd du = centered_derivative(u, grid);
    const double gradient = l2_inner_product(du, du, grid);
    const double margin = -2.0 * form + lambda0 * mass - alpha * (gradient + mass);
    const double scale = 2.0 * std::abs(form) + lambda0 * mass + alpha * (gradient + mass);
    report.margins.push_back(margin);
    report.scales.push_back(scale);
    report.min_margin = std::min(report.min_margin, margin);
    if (margin < -relative_tolerance * scale) report.pass = false;
  }
  return report;
}

void write_operator_csv(std::ostream& out, const DiscreteOperator& op) {
  out << "row,col,value\n";
  out.precision(17);
  const Eigen::Index n = op.size();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - 1); j <= std::min(n - 1, i + 1); ++j)
      if (op.matrix(i, j) != 0.0) out << i << ',' << j << ',' << op.matrix(i, j) << '\n';
}

}  // namespace hetspde
