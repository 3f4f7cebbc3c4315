#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetspde/coeffs.hpp"
#include "hetspde/grid.hpp"
#include "hetspde/random.hpp"

namespace hetspde {

using PointwiseCoefficient = std::function<double(double t, double x, double y, double u1, double u2)>;

/// A nodal coefficient kappa(t, x, Y, u1, u2) or sigma(t, x, Y, u1, u2)
/// evaluated on a whole grid field at once.
class StateCoefficient {
 public:
  using Evaluator = std::function<void(double t, const WeightedGrid& grid, const Eigen::VectorXd& y, double u1,
                                       double u2, Eigen::VectorXd& out)>;

  static StateCoefficient zero();
  static StateCoefficient pointwise(PointwiseCoefficient f);
  /// alpha1(x) u1 + alpha2(x) u2 on the grid nodes.
  static StateCoefficient actuated(Eigen::VectorXd alpha1, Eigen::VectorXd alpha2);
  /// Fixed nodal profile, independent of state and controls.
  static StateCoefficient profile(Eigen::VectorXd values);

  void evaluate(double t, const WeightedGrid& grid, const Eigen::VectorXd& y, double u1, double u2,
                Eigen::VectorXd& out) const;
  bool is_zero() const { return zero_; }
  /// True when the value does not depend on the state y (zero, actuated, profile).
  bool state_independent() const { return state_independent_; }

 private:
  Evaluator eval_;
  bool zero_ = false;
  bool state_independent_ = false;
};

struct ForwardProblem {
  CoefficientField field;
  StateCoefficient drift = StateCoefficient::zero();
  StateCoefficient noise = StateCoefficient::zero();
  Eigen::VectorXd xi;
  double horizon = 1.0;
  double lipschitz = 1.0;        // declared Lipschitz constant of drift and noise in y
  double semigroup_bound = 1.0;  // declared sup_t ||P_t||
  bool disable_operator = false;  // test hook: A = 0
};

/// Open-loop controls sampled at the time nodes t_n, n = 0..N.
struct ControlPair {
  Eigen::VectorXd u1;
  Eigen::VectorXd u2;

  static ControlPair zero(std::int64_t n_steps);
};

struct ForwardOptions {
  std::vector<std::int64_t> record_steps;  // empty: every step 0..N
  bool keep_paths = true;
  int threads = 0;
};

struct ForwardSolution {
  std::vector<std::int64_t> record_steps;
  std::vector<Eigen::MatrixXd> paths;  // paths[p](r, j) = Y_p(t_{record_steps[r]}, x_j)
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;  // unbiased; zero for a single path
  ControlPair controls;
  double dt = 0.0;
  std::string scheme = "semi-implicit-euler";
};

/// (I - dt A) Y_{n+1} = Y_n + dt kappa(t_n, Y_n) + sigma(t_n, Y_n) dB_n for every path.
ForwardSolution simulate_forward(const ForwardProblem& problem, const ControlPair& controls,
                                 const PathEnsemble& ensemble, const WeightedGrid& grid,
                                 const ForwardOptions& options = {});

struct PicardResult {
  // d_k = max_n E ||Y^k(t_n) - Y^{k-1}(t_n)||^2, k = 1..n_iter
  std::vector<double> increment_norms;
  // r_k = d_{k+1} / d_k; zero (with the flag set) once an iterate is exact
  std::vector<double> ratios;
  std::vector<bool> exact;
  Eigen::MatrixXd mean_final;  // ensemble mean of the last iterate, rows = time steps
  bool exact_convergence() const;
};

/// Picard recursion of the mild formulation with uncontrolled coefficients:
/// Y^0 = implicit propagation of xi, Y^{k+1} driven by drift/noise of Y^k.
PicardResult picard_iterate(const ForwardProblem& problem, const PathEnsemble& ensemble, const WeightedGrid& grid,
                            int n_iter, int threads = 0);

/// Declared contraction bound q(T0) = 2 M^2 (T0^2 L^2 + 4 T0 L^2).
double picard_bound(const ForwardProblem& problem, double window);

/// Returns the matrix W of P_tau on the grid, (P_tau g)_i = sum_j W_ij g_j.
using KernelProvider = std::function<Eigen::MatrixXd(double tau)>;

KernelProvider gaussian_provider(const CoefficientField& field, const WeightedGrid& grid);
KernelProvider two_phase_provider(const CoefficientField& field, const WeightedGrid& grid, int steps_per_unit_time);

/// Path-averaged ||Y(t) - P_t xi - sum P_{t-s} (kappa ds + sigma dB_s)|| at the
/// checkpoints (left-endpoint sums), maximised over checkpoints. Needs a
/// solution recorded at every step with paths kept.
double mild_residual(const ForwardSolution& solution, const ForwardProblem& problem, const PathEnsemble& ensemble,
                     const WeightedGrid& grid, const KernelProvider& kernel,
                     const std::vector<std::int64_t>& checkpoints);

/// `t,x,mean,var` rows of the recorded slices.
void write_forward_stats_csv(std::ostream& out, const ForwardSolution& solution, const WeightedGrid& grid);
void write_forward_paths_csv(std::ostream& out, const ForwardSolution& solution, const WeightedGrid& grid,
                             std::int64_t max_paths);

}  // namespace hetspde
