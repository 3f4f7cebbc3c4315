#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>

#include "hetspde/coeffs.hpp"
#include "hetspde/grid.hpp"
#include "hetspde/operator.hpp"

namespace hetspde {

using SourceFunction = std::function<double(double t, double x)>;
using TerminalFunction = std::function<double(double x)>;

/// du = -[kappa u_xx - b u_x + c u + gamma q + f] dt + q dB, u(T) = g,
/// with kappa = rho a / 2 and sigma = sqrt(rho a).
struct LinearBspdeProblem {
  CoefficientField field;
  double c = 0.0;
  double gamma = 0.0;
  SourceFunction f;  // empty means f = 0
  TerminalFunction g;
  double horizon = 1.0;
};

enum class BackwardMethod { kClosedForm, kFdSmooth, kFdTwoPhase };

struct BackwardSolution {
  BackwardMethod method = BackwardMethod::kFdSmooth;
  Eigen::VectorXd times;  // t_n = n dt, n = 0..N
  Eigen::MatrixXd u;      // (N+1) x nodes
  Eigen::MatrixXd q;
  // One-sided q = sigma+- u_x(0+-) at the interface node (piecewise runs only).
  Eigen::VectorXd q_minus;
  Eigen::VectorXd q_plus;
  std::optional<Eigen::Index> interface_index;
};

struct PointValue {
  double u;
  double q;
};

struct ClosedFormOptions {
  double window_sd = 8.0;  // half-width of the y window in standard deviations
  int points = 2000;       // midpoint cells in y; even, so no midpoint sits on the mean
  int time_nodes = 64;     // Gauss-Legendre nodes for the source integral
};

/// Gaussian representation for constant coefficients (t < T).
PointValue solve_closed_form(const LinearBspdeProblem& problem, double t, double x,
                             const ClosedFormOptions& options = {});

/// Closed form sampled on the space-time grid; the row t = T holds g and g'.
BackwardSolution closed_form_on_grid(const LinearBspdeProblem& problem, const WeightedGrid& grid, int n_steps,
                                     const ClosedFormOptions& options = {});

/// Backward Crank-Nicolson (Rannacher start) for v_tau = L v + c v + f from
/// v(T) = terminal, q = sigma times the centred difference of u.
BackwardSolution solve_backward_generator(const Tridiagonal<double>& L, double c,
                                          const std::function<Eigen::VectorXd(double t)>& source,
                                          const Eigen::VectorXd& terminal, double horizon, const WeightedGrid& grid,
                                          int n_steps, const CoefficientField& field, BackwardMethod method);

/// Girsanov-reduced PDE u_t + kappa u_xx - (b + sigma gamma) u_x + c u + f = 0.
BackwardSolution solve_backward_fd(const LinearBspdeProblem& problem, const WeightedGrid& grid, int n_steps);

struct TransmissionJump {
  double jump_u;
  double jump_flux;
};

/// Quadratic extrapolation of u to x = 0 from each side, and second-order
/// one-sided derivatives for the flux kappa u_x.
TransmissionJump transmission_residual(const BackwardSolution& solution, const CoefficientField& field,
                                       const WeightedGrid& grid, Eigen::Index t_index);

enum class InterfaceScheme {
  kSkewExact,  // unit-diffusion coordinate with an exact skew reflection at 0
  kNaiveEuler  // Euler-Maruyama with coefficients looked up at the current position
};

struct McEstimate {
  double estimate;
  double std_error;
};

/// Feynman-Kac estimate of u(t, x) under dX = -(b + sigma gamma) ds + sigma dW.
McEstimate feynman_kac_mc(const LinearBspdeProblem& problem, double t, double x, std::int64_t n_paths,
                          std::int64_t n_steps, std::uint64_t seed,
                          InterfaceScheme scheme = InterfaceScheme::kSkewExact, int threads = 0);

/// max over interior (n, j), interface excluded, of |q - sigma D_c u|.
double q_consistency(const BackwardSolution& solution, const CoefficientField& field, const WeightedGrid& grid);

/// Space-time table t,x,u,q.
void write_backward_csv(std::ostream& out, const BackwardSolution& solution, const WeightedGrid& grid,
                        int time_stride = 1);

}  // namespace hetspde
