#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetspde/bspde.hpp"
#include "hetspde/coeffs.hpp"
#include "hetspde/forward.hpp"
#include "hetspde/grid.hpp"
#include "hetspde/operator.hpp"

namespace hetspde {

struct ControlBox {
  double lower;
  double upper;
};

/// Two-player game dY = [A Y + alpha1 u1 + alpha2 u2] dt + sigma0 s(x) dB with
/// costs J^i = E[(gamma_i/2) int u_i^2 dt + (gamma3/2) int Y(T)^2 dx].
struct GameSpec {
  CoefficientField field;
  Eigen::VectorXd alpha1;
  Eigen::VectorXd alpha2;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
  double sigma0 = 0.0;
  Eigen::VectorXd noise_shape;  // s(x); empty means s = 1
  Eigen::VectorXd xi;
  double horizon = 1.0;
  std::optional<ControlBox> box1;
  std::optional<ControlBox> box2;

  const Eigen::VectorXd& alpha(int player) const;
  double gamma(int player) const;
  const std::optional<ControlBox>& box(int player) const;
  /// sigma0 s(x) on the grid.
  Eigen::VectorXd noise(const WeightedGrid& grid) const;
};

/// Throws std::invalid_argument for nonpositive weights or mismatched fields.
void validate_game_spec(const GameSpec& spec, const WeightedGrid& grid);

ForwardProblem game_forward_problem(const GameSpec& spec, const WeightedGrid& grid);

struct AdjointPair {
  int player = 1;
  Eigen::MatrixXd p;  // (N+1) x nodes
  Eigen::MatrixXd q;
};

struct ControlTrajectory {
  Eigen::VectorXd u;       // per time node
  std::vector<bool> clipped;
  bool any_clipped() const;
};

struct HamiltonianEval {
  double value;
  double du1;
  double du2;
};

HamiltonianEval hamiltonian(const GameSpec& spec, int player, const Eigen::VectorXd& y, double u1, double u2,
                            const Eigen::VectorXd& p, const Eigen::VectorXd& q, const WeightedGrid& grid,
                            const DiscreteOperator& A);

/// Adjoint operator used for the backward equation: the discrete A* for
/// smooth fields, the flux-continuous transmission form for piecewise ones.
Tridiagonal<double> adjoint_generator(const CoefficientField& field, const WeightedGrid& grid);

/// p(T) = gamma3 terminal_state, -dp = A* p dt - q dB, q = sigma p_x.
AdjointPair solve_adjoint(const GameSpec& spec, int player, const Eigen::VectorXd& terminal_state,
                          const WeightedGrid& grid, int n_steps);

/// u[n] = -(1/gamma_i) <p[n], alpha_i>, clipped into the box when one is set.
ControlTrajectory optimal_control(const GameSpec& spec, int player, const AdjointPair& adjoint,
                                  const WeightedGrid& grid);

/// -(1/gamma_i) double integral of phi(y) alpha_i(x) N(y; x - b0 (T-t), rho0 a0 (T-t)).
double gaussian_convolution_control(const GameSpec& spec, int player, const Eigen::VectorXd& phi, double t,
                                    const WeightedGrid& grid);

/// The same control through a numerically built two-phase kernel (Fubini
/// form), at the given time nodes of an n_steps grid.
Eigen::VectorXd kernel_route_control(const GameSpec& spec, int player, const Eigen::VectorXd& phi,
                                     const std::vector<std::int64_t>& time_nodes, int n_steps,
                                     const WeightedGrid& grid, int kernel_steps_per_unit_time);

/// r_i = max_n |<p^i[n], alpha_i> + gamma_i u_i[n]|.
std::pair<double, double> stationarity_residual(const GameSpec& spec, const ControlPair& controls,
                                                const AdjointPair& adjoint1, const AdjointPair& adjoint2,
                                                const WeightedGrid& grid);

struct CostEstimate {
  double J;
  double std_error;
};

/// Per-path costs from a forward solution whose last recorded step is T.
Eigen::VectorXd path_costs(const GameSpec& spec, int player, const ControlPair& controls,
                           const ForwardSolution& forward, const WeightedGrid& grid);
CostEstimate cost(const GameSpec& spec, int player, const ControlPair& controls, const ForwardSolution& forward,
                  const WeightedGrid& grid);

struct ConvexityReport {
  double d2H1;
  double d2H2;
  bool terminal_convex;
  bool ill_conditioned;
  bool pass;
  std::string note;
};
ConvexityReport convexity_certificate(const GameSpec& spec);

enum class AdjointMode { kMeanField, kPerPath };

struct EquilibriumOptions {
  AdjointMode mode = AdjointMode::kMeanField;
  int threads = 0;
  // projected fixed-point iteration, used only when a box is active
  int max_iterations = 1000;
  double tolerance = 1e-10;
  double damping = 0.5;
};

struct Equilibrium {
  ControlPair controls;
  AdjointPair adjoint1;  // ensemble mean of the per-path adjoints (or mean-field adjoint)
  AdjointPair adjoint2;
  Eigen::VectorXd mean_terminal;
  ForwardSolution forward;  // equilibrium ensemble, recorded at T
  double r1 = 0.0;
  double r2 = 0.0;
  int iterations = 0;
  bool clipped = false;
};

/// Open-loop equilibrium of the linear-quadratic game: the controls solve
/// u = Phi(u), Phi affine through Y(T); the affine map is assembled from unit
/// control responses and solved directly (projected iteration under boxes).
Equilibrium solve_equilibrium(const GameSpec& spec, const WeightedGrid& grid, const PathEnsemble& ensemble,
                              const EquilibriumOptions& options = {});

/// Bounded random directions beta(t) on the time nodes (sup norm 1).
std::vector<Eigen::VectorXd> random_directions(int count, std::int64_t n_steps, std::uint64_t seed);

struct DeviationRecord {
  int player;
  int direction;
  double amplitude;
  double delta_J;
  double std_error;
  bool pass;
};

struct ParabolaFit {
  int player;
  int direction;
  double curvature;
  double slope;
  double vertex;
};

struct DeviationReport {
  std::vector<DeviationRecord> records;
  std::vector<ParabolaFit> fits;
  double worst_normalized = 0.0;  // min over records of delta_J / std_error
  double max_abs_vertex = 0.0;
  double min_curvature = 0.0;
  bool pass = true;
};

DeviationReport nash_deviation_test(const GameSpec& spec, const Equilibrium& equilibrium,
                                    const PathEnsemble& ensemble, const std::vector<Eigen::VectorXd>& directions,
                                    const std::vector<double>& amplitudes, const WeightedGrid& grid,
                                    double vertex_tolerance = 0.05, int threads = 0);

/// t,u1,u2,r1,r2 where r_i is the pointwise stationarity residual.
void write_equilibrium_csv(std::ostream& out, const GameSpec& spec, const Equilibrium& eq, const WeightedGrid& grid);
void write_deviation_csv(std::ostream& out, const DeviationReport& report);

}  // namespace hetspde
