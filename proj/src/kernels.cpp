#include "hetspde/kernels.hpp"

#include <algorithm>
#include <ostream>

#include "hetspde/operator.hpp"
#include "hetspde/theta_scheme.hpp"

namespace hetspde {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double phi(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Phi(zr) - Phi(zl) without cancellation in the upper tail.
double normal_mass(double zl, double zr) {
  if (zl > 0.0) return 0.5 * (std::erfc(zl * kInvSqrt2) - std::erfc(zr * kInvSqrt2));
  return 0.5 * (std::erfc(-zr * kInvSqrt2) - std::erfc(-zl * kInvSqrt2));
}

GaussianKernelParams constant_params(const CoefficientField& field, double drift_sign, double gamma) {
  const auto values = field.constant_values();
  if (!values) throw UnsupportedKind("Gaussian kernels need a constant-coefficient field");
  const double sigma = std::sqrt(values->rho * values->a);
  return {sigma, drift_sign * values->b + sigma * gamma};
}

}  // namespace

GaussianKernelParams GaussianKernelParams::girsanov(const CoefficientField& field, double gamma) {
  return constant_params(field, 1.0, gamma);
}

GaussianKernelParams GaussianKernelParams::forward_semigroup(const CoefficientField& field) {
  return constant_params(field, -1.0, 0.0);
}

Eigen::MatrixXd gaussian_kernel_matrix(const GaussianKernelParams& params, double tau, const WeightedGrid& grid) {
  if (!(tau > 0.0)) throw std::domain_error("gaussian kernel: tau must be positive");
  const Eigen::Index n = grid.size();
  const double h = grid.spacing();
  const double s = params.sigma * std::sqrt(tau);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = grid.node(i) - params.drift * tau;
    for (Eigen::Index j = 0; j < n; ++j) z(j) = (grid.node(j) - m) / s;
    W(i, 0) += 0.5 * std::erfc(-z(0) * kInvSqrt2);
    W(i, n - 1) += 0.5 * std::erfc(z(n - 1) * kInvSqrt2);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      if ((z(k) > 40.0) || (z(k + 1) < -40.0)) continue;
      const double P = normal_mass(z(k), z(k + 1));
      // integral of (y - y_k) N(y) over the cell
      const double Q = (m - grid.node(k)) * P + s * (phi(z(k)) - phi(z(k + 1)));
      W(i, k) += P - Q / h;
      W(i, k + 1) += Q / h;
    }
  }
  return W;
}

Eigen::VectorXd apply_kernel(const GaussianKernelParams& params, double tau, const Eigen::VectorXd& g,
                             const WeightedGrid& grid) {
  grid.require_match(g.size());
  return gaussian_kernel_matrix(params, tau, grid) * g;
}

Eigen::VectorXd apply_kernel(const TwoPhaseKernel& kernel, const Eigen::VectorXd& g, const WeightedGrid& grid) {
  grid.require_match(g.size());
  if (kernel.density.rows() != grid.size()) throw GridError("kernel was built on a different grid");
  return kernel.density * grid.trapezoid().cwiseProduct(g);
}

TwoPhaseKernel build_two_phase_kernel(const CoefficientField& field, double gamma, double tau,
                                      const WeightedGrid& grid, int n_steps) {
  if (!field.is_piecewise()) throw UnsupportedKind("two-phase kernel needs a piecewise-constant field");
  if (n_steps < 4) throw std::invalid_argument("two-phase kernel: n_steps must be at least 4");
  if (!(tau > 0.0)) throw std::domain_error("two-phase kernel: tau must be positive");
  const Eigen::Index n = grid.size();
  const DiscreteOperator L = assemble_backward_generator(field, gamma, grid);
  const CrankNicolson stepper(L.matrix, tau / n_steps);
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n) / grid.spacing();
  stepper.rannacher_step(V);
  for (int k = 1; k < n_steps; ++k) stepper.step(V);

  TwoPhaseKernel kernel;
  kernel.tau = tau;
  kernel.clipped_mass = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (V(i, j) < 0.0) {
        kernel.clipped_mass(i) -= V(i, j) * grid.trapezoid()(j);
        V(i, j) = 0.0;
      }
  kernel.density = std::move(V);
  return kernel;
}

BoundReport aronson_bound_check(const TwoPhaseKernel& kernel, const WeightedGrid& grid, double C1, double C2,
                                double floor) {
  BoundReport report;
  const double tau = kernel.tau;
  // The inert end rows keep their initial delta, so they are not screened.
  for (Eigen::Index j = 1; j + 1 < kernel.density.cols(); ++j)
    for (Eigen::Index i = 1; i + 1 < kernel.density.rows(); ++i) {
      const double d = grid.node(i) - grid.node(j);
      const double bound = C1 / std::sqrt(tau) * std::exp(-C2 * d * d / tau) + floor;
      const double p = kernel.density(i, j);
      if (p > bound) report.violations.emplace_back(i, j);
      if (bound > 0.0) report.worst_ratio = std::max(report.worst_ratio, p / bound);
    }
  return report;
}

void write_kernel_csv(std::ostream& out, const TwoPhaseKernel& kernel, const WeightedGrid& grid, int stride) {
  out << "x,y,p\n";
  out.precision(12);
  const Eigen::Index n = kernel.density.rows();
  for (Eigen::Index i = 0; i < n; i += stride)
    for (Eigen::Index j = 0; j < n; j += stride)
      out << grid.node(i) << ',' << grid.node(j) << ',' << kernel.density(i, j) << '\n';
}

}  // namespace hetspde
