#pragma once

#include <Eigen/Core>
#include <cmath>
#include <iosfwd>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hetspde/coeffs.hpp"
#include "hetspde/grid.hpp"

namespace hetspde {

/// Constant-coefficient transition kernel: X_tau ~ N(x - drift tau, sigma^2 tau).
struct GaussianKernelParams {
  double sigma;
  double drift;

  double kappa() const { return 0.5 * sigma * sigma; }

  /// Backward problems under the tilted measure: drift b0 + sigma gamma.
  static GaussianKernelParams girsanov(const CoefficientField& field, double gamma);
  /// Semigroup of the forward operator kappa d_xx + b0 d_x: drift -b0.
  static GaussianKernelParams forward_semigroup(const CoefficientField& field);
};

template <typename Scalar>
Scalar gaussian_density(Scalar sigma, Scalar drift, Scalar tau, Scalar x, Scalar y) {
  if (!(tau > Scalar(0))) throw std::domain_error("gaussian_density: tau must be positive");
  const Scalar var = sigma * sigma * tau;
  const Scalar z = y - x + drift * tau;
  return std::exp(-z * z / (Scalar(2) * var)) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * var);
}

inline double gaussian_density(const GaussianKernelParams& params, double tau, double x, double y) {
  return gaussian_density<double>(params.sigma, params.drift, tau, x, y);
}

/// Quadrature matrix W with (P_tau g)_i = sum_j W_ij g_j. The Gaussian is
/// integrated exactly against the piecewise-linear interpolant of g, with the
/// end values continued as constants beyond the window. Rows sum to one.
Eigen::MatrixXd gaussian_kernel_matrix(const GaussianKernelParams& params, double tau, const WeightedGrid& grid);

Eigen::VectorXd apply_kernel(const GaussianKernelParams& params, double tau, const Eigen::VectorXd& g,
                             const WeightedGrid& grid);

/// density(i, j) ~ p(tau, x_i, y_j) of the two-phase diffusion.
struct TwoPhaseKernel {
  double tau = 0.0;
  Eigen::MatrixXd density;
  // Trapezoid mass of the negative entries removed from each row.
  Eigen::VectorXd clipped_mass;
};

Eigen::VectorXd apply_kernel(const TwoPhaseKernel& kernel, const Eigen::VectorXd& g, const WeightedGrid& grid);

/// Evolves discrete deltas delta_j / h under v_s = kappa v_xx - (b + sigma gamma) v_x
/// in flux form (Crank-Nicolson with a Rannacher start), so column j is
/// p(tau, ., y_j). Negative entries are clipped.
TwoPhaseKernel build_two_phase_kernel(const CoefficientField& field, double gamma, double tau,
                                      const WeightedGrid& grid, int n_steps);

struct BoundReport {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> violations;
  double worst_ratio = 0.0;  // max of p / bound over entries with a positive bound
  bool pass() const { return violations.empty(); }
};

/// Screens p(tau, x, y) <= C1 / sqrt(tau) exp(-C2 |x - y|^2 / tau) + floor over
/// interior node pairs.
BoundReport aronson_bound_check(const TwoPhaseKernel& kernel, const WeightedGrid& grid, double C1, double C2,
                                double floor = 0.0);

/// (x, y, p) rows for every `stride`-th node pair.
void write_kernel_csv(std::ostream& out, const TwoPhaseKernel& kernel, const WeightedGrid& grid, int stride = 1);

}  // namespace hetspde
