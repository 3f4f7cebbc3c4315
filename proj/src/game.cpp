#include "hetspde/game.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "hetspde/kernels.hpp"
#include "hetspde/parallel.hpp"
#include "hetspde/random.hpp"
#include "hetspde/tridiagonal.hpp"

namespace hetspde {
namespace {

void check_player(int player) {
  if (player != 1 && player != 2) throw std::invalid_argument("player index must be 1 or 2");
}

double clip(double v, const std::optional<ControlBox>& box) {
  if (!box) return v;
  return std::clamp(v, box->lower, box->upper);
}

// Controls u_j[n] = -(1/gamma_j) <p[n], alpha_j>_H before any clipping.
Eigen::VectorXd raw_control(const GameSpec& spec, int player, const Eigen::MatrixXd& p, const WeightedGrid& grid) {
  const Eigen::VectorXd& alpha = spec.alpha(player);
  Eigen::VectorXd u(p.rows());
  for (Eigen::Index n = 0; n < p.rows(); ++n) u(n) = -inner_product(p.row(n).transpose(), alpha, grid) / spec.gamma(player);
  return u;
}

double trapezoid_time(const Eigen::VectorXd& v, double dt) {
  if (v.size() < 2) return 0.0;
  return dt * (v.sum() - 0.5 * (v(0) + v(v.size() - 1)));
}

}  // namespace

const Eigen::VectorXd& GameSpec::alpha(int player) const {
  check_player(player);
  return player == 1 ? alpha1 : alpha2;
}

double GameSpec::gamma(int player) const {
  check_player(player);
  return player == 1 ? gamma1 : gamma2;
}

const std::optional<ControlBox>& GameSpec::box(int player) const {
  check_player(player);
  return player == 1 ? box1 : box2;
}

Eigen::VectorXd GameSpec::noise(const WeightedGrid& grid) const {
  if (noise_shape.size() == 0) return Eigen::VectorXd::Constant(grid.size(), sigma0);
  grid.require_match(noise_shape.size());
  return sigma0 * noise_shape;
}

void validate_game_spec(const GameSpec& spec, const WeightedGrid& grid) {
  if (!(spec.gamma1 > 0.0) || !(spec.gamma2 > 0.0))
    throw std::invalid_argument("game: control weights gamma1 and gamma2 must be positive");
  if (!(spec.gamma3 > 0.0)) throw std::invalid_argument("game: terminal weight gamma3 must be positive");
  if (!(spec.sigma0 >= 0.0)) throw std::invalid_argument("game: sigma0 must be nonnegative");
  if (!(spec.horizon > 0.0)) throw std::invalid_argument("game: horizon must be positive");
  grid.require_match(spec.alpha1.size());
  grid.require_match(spec.alpha2.size());
  grid.require_match(spec.xi.size());
  if (spec.noise_shape.size() != 0) grid.require_match(spec.noise_shape.size());
  if (!spec.alpha1.allFinite() || !spec.alpha2.allFinite() || !spec.xi.allFinite())
    throw std::invalid_argument("game: actuators and initial state must be finite");
  for (const auto* box : {&spec.box1, &spec.box2})
    if (*box && !((*box)->lower <= (*box)->upper)) throw std::invalid_argument("game: empty control box");
}

ForwardProblem game_forward_problem(const GameSpec& spec, const WeightedGrid& grid) {
  ForwardProblem problem;
  problem.field = spec.field;
  problem.drift = StateCoefficient::actuated(spec.alpha1, spec.alpha2);
  if (spec.sigma0 > 0.0) problem.noise = StateCoefficient::profile(spec.noise(grid));
  problem.xi = spec.xi;
  problem.horizon = spec.horizon;
  return problem;
}

bool ControlTrajectory::any_clipped() const { return std::find(clipped.begin(), clipped.end(), true) != clipped.end(); }

HamiltonianEval hamiltonian(const GameSpec& spec, int player, const Eigen::VectorXd& y, double u1, double u2,
                            const Eigen::VectorXd& p, const Eigen::VectorXd& q, const WeightedGrid& grid,
                            const DiscreteOperator& A) {
  check_player(player);
  grid.require_match(y.size());
  grid.require_match(p.size());
  grid.require_match(q.size());
  if (A.matrix.size() != grid.size()) throw GridError("hamiltonian: operator was assembled on a different grid");
  const double pa1 = inner_product(p, spec.alpha1, grid);
  const double pa2 = inner_product(p, spec.alpha2, grid);
  const double ui = player == 1 ? u1 : u2;
  HamiltonianEval h;
  h.value = inner_product(p, A.apply(y), grid) + u1 * pa1 + u2 * pa2 + inner_product(q, spec.noise(grid), grid) +
            0.5 * spec.gamma(player) * ui * ui;
  h.du1 = pa1 + (player == 1 ? spec.gamma1 * u1 : 0.0);
  h.du2 = pa2 + (player == 2 ? spec.gamma2 * u2 : 0.0);
  return h;
}

Tridiagonal<double> adjoint_generator(const CoefficientField& field, const WeightedGrid& grid) {
  if (field.is_piecewise()) return assemble_backward_generator(field, 0.0, grid).matrix;
  return assemble_adjoint(field, grid).matrix;
}

AdjointPair solve_adjoint(const GameSpec& spec, int player, const Eigen::VectorXd& terminal_state,
                          const WeightedGrid& grid, int n_steps) {
  check_player(player);
  grid.require_match(terminal_state.size());
  const BackwardMethod method = spec.field.is_piecewise() ? BackwardMethod::kFdTwoPhase : BackwardMethod::kFdSmooth;
  BackwardSolution sol = solve_backward_generator(adjoint_generator(spec.field, grid), 0.0, {},
                                                  spec.gamma3 * terminal_state, spec.horizon, grid, n_steps,
                                                  spec.field, method);
  AdjointPair pair;
  pair.player = player;
  pair.p = std::move(sol.u);
  pair.q = std::move(sol.q);
  return pair;
}

ControlTrajectory optimal_control(const GameSpec& spec, int player, const AdjointPair& adjoint,
                                  const WeightedGrid& grid) {
  grid.require_match(adjoint.p.cols());
  ControlTrajectory ctl;
  ctl.u = raw_control(spec, player, adjoint.p, grid);
  ctl.clipped.assign(ctl.u.size(), false);
  const auto& box = spec.box(player);
  for (Eigen::Index n = 0; n < ctl.u.size(); ++n) {
    const double c = clip(ctl.u(n), box);
    ctl.clipped[n] = c != ctl.u(n);
    ctl.u(n) = c;
  }
  return ctl;
}

double gaussian_convolution_control(const GameSpec& spec, int player, const Eigen::VectorXd& phi, double t,
                                    const WeightedGrid& grid) {
  check_player(player);
  grid.require_match(phi.size());
  if (!spec.field.constant_values()) throw UnsupportedKind("Gaussian convolution control needs constant coefficients");
  const double tau = spec.horizon - t;
  if (tau < 0.0) throw std::domain_error("gaussian_convolution_control: t beyond the horizon");
  const Eigen::VectorXd& alpha = spec.alpha(player);
  if (tau == 0.0) return -l2_inner_product(phi, alpha, grid) / spec.gamma(player);
  // N(y; x - b0 tau, rho0 a0 tau) is the law of the backward diffusion with drift b0
  const Eigen::MatrixXd W = gaussian_kernel_matrix(GaussianKernelParams::girsanov(spec.field, 0.0), tau, grid);
  return -l2_inner_product(W * phi, alpha, grid) / spec.gamma(player);
}

Eigen::VectorXd kernel_route_control(const GameSpec& spec, int player, const Eigen::VectorXd& phi,
                                     const std::vector<std::int64_t>& time_nodes, int n_steps,
                                     const WeightedGrid& grid, int kernel_steps_per_unit_time) {
  check_player(player);
  grid.require_match(phi.size());
  const Eigen::VectorXd& alpha = spec.alpha(player);
  const double dt = spec.horizon / n_steps;
  // Fubini: u(t) = -(1/gamma) sum_j phi_j trap_j sum_i alpha_i w_i trap_i p(T - t, x_i, y_j)
  const Eigen::VectorXd weighted_alpha = alpha.cwiseProduct(grid.weights()).cwiseProduct(grid.trapezoid());
  Eigen::VectorXd u(static_cast<Eigen::Index>(time_nodes.size()));
  for (std::size_t k = 0; k < time_nodes.size(); ++k) {
    const double tau = spec.horizon - static_cast<double>(time_nodes[k]) * dt;
    double pairing;
    if (tau <= 1e-12 * spec.horizon) {
      pairing = inner_product(phi, alpha, grid);
    } else {
      const int steps = std::max(4, static_cast<int>(std::ceil(tau * kernel_steps_per_unit_time)));
      const TwoPhaseKernel K = build_two_phase_kernel(spec.field, 0.0, tau, grid, steps);
      const Eigen::VectorXd marginal = K.density.transpose() * weighted_alpha;
      pairing = (phi.array() * grid.trapezoid().array() * marginal.array()).sum();
    }
    u(static_cast<Eigen::Index>(k)) = -pairing / spec.gamma(player);
  }
  return u;
}

std::pair<double, double> stationarity_residual(const GameSpec& spec, const ControlPair& controls,
                                                const AdjointPair& adjoint1, const AdjointPair& adjoint2,
                                                const WeightedGrid& grid) {
  auto one = [&](int player, const Eigen::VectorXd& u, const AdjointPair& adj) {
    grid.require_match(adj.p.cols());
    if (u.size() != adj.p.rows()) throw std::invalid_argument("stationarity_residual: control length mismatch");
    const Eigen::VectorXd raw = raw_control(spec, player, adj.p, grid);
    const double g = spec.gamma(player);
    double r = 0.0;
    // Under a box the condition is the projection u = clip(raw); without one
    // this is exactly |<p, alpha> + gamma u|.
    for (Eigen::Index n = 0; n < u.size(); ++n) r = std::max(r, g * std::abs(u(n) - clip(raw(n), spec.box(player))));
    return r;
  };
  return {one(1, controls.u1, adjoint1), one(2, controls.u2, adjoint2)};
}

Eigen::VectorXd path_costs(const GameSpec& spec, int player, const ControlPair& controls,
                           const ForwardSolution& forward, const WeightedGrid& grid) {
  check_player(player);
  if (forward.paths.empty()) throw std::invalid_argument("cost: forward solution has no stored paths");
  const Eigen::VectorXd& u = player == 1 ? controls.u1 : controls.u2;
  const double running = 0.5 * spec.gamma(player) * trapezoid_time(u.array().square().matrix(), forward.dt);
  const auto last = static_cast<Eigen::Index>(forward.record_steps.size()) - 1;
  Eigen::VectorXd J(static_cast<Eigen::Index>(forward.paths.size()));
  for (std::size_t p = 0; p < forward.paths.size(); ++p) {
    const Eigen::VectorXd yT = forward.paths[p].row(last).transpose();
    J(static_cast<Eigen::Index>(p)) = running + 0.5 * spec.gamma3 * l2_inner_product(yT, yT, grid);
  }
  return J;
}

namespace {
CostEstimate summarize(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const auto n = static_cast<double>(v.size());
  const double var = v.size() > 1 ? (v.array() - mean).square().sum() / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}
}  // namespace

CostEstimate cost(const GameSpec& spec, int player, const ControlPair& controls, const ForwardSolution& forward,
                  const WeightedGrid& grid) {
  const std::int64_t N = std::llround(spec.horizon / forward.dt);
  if (forward.record_steps.empty() || forward.record_steps.back() != N)
    throw std::invalid_argument("cost: forward solution must record the terminal step last");
  return summarize(path_costs(spec, player, controls, forward, grid));
}

ConvexityReport convexity_certificate(const GameSpec& spec) {
  ConvexityReport r;
  r.d2H1 = spec.gamma1;
  r.d2H2 = spec.gamma2;
  r.terminal_convex = spec.gamma3 > 0.0;
  r.pass = r.d2H1 > 0.0 && r.d2H2 > 0.0 && r.terminal_convex;
  r.ill_conditioned = std::min(spec.gamma1, spec.gamma2) < 1e-6;
  if (!r.pass) r.note = "nonconvex Hamiltonian or terminal cost";
  else if (r.ill_conditioned) r.note = "control weight below 1e-6: first-order condition is near singular";
  else r.note = "H^i strictly convex in u_i, terminal cost convex";
  return r;
}

Equilibrium solve_equilibrium(const GameSpec& spec, const WeightedGrid& grid, const PathEnsemble& ensemble,
                              const EquilibriumOptions& options) {
  validate_game_spec(spec, grid);
  const std::int64_t N = ensemble.n_steps();
  const auto Ni = static_cast<Eigen::Index>(N);
  const double dt = spec.horizon / static_cast<double>(N);
  const ForwardProblem problem = game_forward_problem(spec, grid);
  const int steps = static_cast<int>(N);

  ForwardOptions fopt;
  fopt.record_steps = {N};
  fopt.keep_paths = false;
  fopt.threads = options.threads;
  const Eigen::VectorXd y0 = simulate_forward(problem, ControlPair::zero(N), ensemble, grid, fopt).mean.row(0).transpose();

  // G(Y) stacks <S_n(gamma3 Y), alpha_j>_H for j = 1, 2 and n = 0..N.
  const Eigen::Index dim = 2 * (Ni + 1);
  auto pairings = [&](const Eigen::VectorXd& y) {
    const Eigen::MatrixXd p = solve_adjoint(spec, 1, y, grid, steps).p;
    Eigen::VectorXd out(dim);
    out.head(Ni + 1) = raw_control(spec, 1, p, grid);
    out.tail(Ni + 1) = raw_control(spec, 2, p, grid);
    return out;
  };

  // Terminal response to a unit control at node m < N: dt R^{N-m} alpha_i.
  const TridiagonalLu<double> R(assemble_operator(spec.field, grid).matrix.affine(1.0, -dt));
  const Eigen::VectorXd c0 = pairings(y0);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  for (int player = 1; player <= 2; ++player) {
    std::vector<Eigen::VectorXd> responses(N);
    Eigen::VectorXd v = dt * spec.alpha(player);
    for (std::int64_t m = N - 1; m >= 0; --m) {
      R.solve_in_place(v);
      responses[m] = v;
    }
    const Eigen::Index offset = player == 1 ? 0 : Ni + 1;
    std::vector<Eigen::VectorXd> cols(N);
    parallel_for(N, [&](std::int64_t m) { cols[m] = pairings(responses[m]); }, options.threads);
    for (std::int64_t m = 0; m < N; ++m) K.col(offset + m) = cols[m];
  }

  Eigen::VectorXd U;
  Equilibrium eq;
  if (!spec.box1 && !spec.box2) {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    U = (I - K).partialPivLu().solve(c0);
    eq.iterations = 1;
  } else {
    auto project = [&](Eigen::VectorXd v) {
      for (Eigen::Index k = 0; k < dim; ++k) v(k) = clip(v(k), spec.box(k <= Ni ? 1 : 2));
      return v;
    };
    U = project(c0);
    for (eq.iterations = 1; eq.iterations <= options.max_iterations; ++eq.iterations) {
      const Eigen::VectorXd next = (1.0 - options.damping) * U + options.damping * project(c0 + K * U);
      const double change = (next - U).lpNorm<Eigen::Infinity>();
      U = next;
      if (change <= options.tolerance * std::max(1.0, U.lpNorm<Eigen::Infinity>())) break;
    }
    if (eq.iterations > options.max_iterations)
      throw std::runtime_error("solve_equilibrium: projected iteration did not converge");
  }
  eq.controls.u1 = U.head(Ni + 1);
  eq.controls.u2 = U.tail(Ni + 1);

  fopt.keep_paths = true;
  eq.forward = simulate_forward(problem, eq.controls, ensemble, grid, fopt);
  eq.mean_terminal = eq.forward.mean.row(0).transpose();
  if (options.mode == AdjointMode::kMeanField) {
    eq.adjoint1 = solve_adjoint(spec, 1, eq.mean_terminal, grid, steps);
  } else {
    // Per-path adjoints conditional on each realised terminal state, reduced in path order.
    const std::int64_t P = ensemble.n_paths();
    std::vector<AdjointPair> per_path(P);
    parallel_for(P, [&](std::int64_t p) {
      per_path[p] = solve_adjoint(spec, 1, eq.forward.paths[p].row(0).transpose(), grid, steps);
    }, options.threads);
    eq.adjoint1.player = 1;
    eq.adjoint1.p = Eigen::MatrixXd::Zero(Ni + 1, grid.size());
    eq.adjoint1.q = Eigen::MatrixXd::Zero(Ni + 1, grid.size());
    for (const AdjointPair& a : per_path) {
      eq.adjoint1.p += a.p;
      eq.adjoint1.q += a.q;
    }
    eq.adjoint1.p /= static_cast<double>(P);
    eq.adjoint1.q /= static_cast<double>(P);
  }
  // Both players share the terminal gradient gamma3 Y(T), hence the adjoint.
  eq.adjoint2 = eq.adjoint1;
  eq.adjoint2.player = 2;
  const auto [r1, r2] = stationarity_residual(spec, eq.controls, eq.adjoint1, eq.adjoint2, grid);
  eq.r1 = r1;
  eq.r2 = r2;
  eq.clipped = optimal_control(spec, 1, eq.adjoint1, grid).any_clipped() ||
               optimal_control(spec, 2, eq.adjoint2, grid).any_clipped();
  return eq;
}

std::vector<Eigen::VectorXd> random_directions(int count, std::int64_t n_steps, std::uint64_t seed) {
  constexpr int kModes = 4;
  std::vector<Eigen::VectorXd> out;
  for (int d = 0; d < count; ++d) {
    auto gen = make_stream(seed, static_cast<std::uint64_t>(d), 0x444952);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double c[kModes], s[kModes];
    for (int k = 0; k < kModes; ++k) {
      c[k] = U(gen);
      s[k] = U(gen);
    }
    Eigen::VectorXd beta(n_steps + 1);
    for (std::int64_t n = 0; n <= n_steps; ++n) {
      const double t = static_cast<double>(n) / static_cast<double>(n_steps);
      double v = 0.0;
      for (int k = 0; k < kModes; ++k) v += c[k] * std::cos(k * M_PI * t) + s[k] * std::sin((k + 1) * M_PI * t);
      beta(n) = v;
    }
    const double sup = beta.lpNorm<Eigen::Infinity>();
    out.push_back(sup > 0.0 ? (beta / sup).eval() : Eigen::VectorXd::Ones(n_steps + 1));
  }
  return out;
}

DeviationReport nash_deviation_test(const GameSpec& spec, const Equilibrium& equilibrium,
                                    const PathEnsemble& ensemble, const std::vector<Eigen::VectorXd>& directions,
                                    const std::vector<double>& amplitudes, const WeightedGrid& grid,
                                    double vertex_tolerance, int threads) {
  validate_game_spec(spec, grid);
  const std::int64_t N = ensemble.n_steps();
  const ForwardProblem problem = game_forward_problem(spec, grid);
  ForwardOptions fopt;
  fopt.record_steps = {N};
  fopt.threads = threads;
  const ForwardSolution base = simulate_forward(problem, equilibrium.controls, ensemble, grid, fopt);

  DeviationReport report;
  report.worst_normalized = std::numeric_limits<double>::infinity();
  report.min_curvature = std::numeric_limits<double>::infinity();
  for (int player = 1; player <= 2; ++player) {
    const Eigen::VectorXd J0 = path_costs(spec, player, equilibrium.controls, base, grid);
    for (std::size_t d = 0; d < directions.size(); ++d) {
      if (directions[d].size() != N + 1) throw std::invalid_argument("deviation direction length mismatch");
      std::vector<double> as{0.0}, dj{0.0};
      for (double a : amplitudes) {
        ControlPair dev = equilibrium.controls;
        (player == 1 ? dev.u1 : dev.u2) += a * directions[d];
        DeviationRecord rec{player, static_cast<int>(d), a, 0.0, 0.0, true};
        if (a != 0.0) {
          const ForwardSolution sol = simulate_forward(problem, dev, ensemble, grid, fopt);
          const CostEstimate diff = summarize(path_costs(spec, player, dev, sol, grid) - J0);
          rec.delta_J = diff.J;
          rec.std_error = diff.std_error;
        }
        rec.pass = rec.delta_J >= -3.0 * rec.std_error;
        if (rec.std_error > 0.0) report.worst_normalized = std::min(report.worst_normalized, rec.delta_J / rec.std_error);
        report.pass = report.pass && rec.pass;
        report.records.push_back(rec);
        as.push_back(a);
        dj.push_back(rec.delta_J);
      }
      // Least-squares parabola c0 + c1 a + c2 a^2 through the amplitudes and (0, 0).
      Eigen::MatrixXd V(static_cast<Eigen::Index>(as.size()), 3);
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(as.size()));
      for (std::size_t k = 0; k < as.size(); ++k) {
        V(static_cast<Eigen::Index>(k), 0) = 1.0;
        V(static_cast<Eigen::Index>(k), 1) = as[k];
        V(static_cast<Eigen::Index>(k), 2) = as[k] * as[k];
        rhs(static_cast<Eigen::Index>(k)) = dj[k];
      }
      const Eigen::Vector3d c = (V.transpose() * V).ldlt().solve(V.transpose() * rhs);
      ParabolaFit fit{player, static_cast<int>(d), c(2), c(1), c(2) > 0.0 ? -c(1) / (2.0 * c(2)) : INFINITY};
      report.min_curvature = std::min(report.min_curvature, fit.curvature);
      report.max_abs_vertex = std::max(report.max_abs_vertex, std::abs(fit.vertex));
      report.pass = report.pass && fit.curvature >= 0.0 && std::abs(fit.vertex) <= vertex_tolerance;
      report.fits.push_back(fit);
    }
  }
  return report;
}

void write_equilibrium_csv(std::ostream& out, const GameSpec& spec, const Equilibrium& eq, const WeightedGrid& grid) {
  const Eigen::VectorXd raw1 = raw_control(spec, 1, eq.adjoint1.p, grid);
  const Eigen::VectorXd raw2 = raw_control(spec, 2, eq.adjoint2.p, grid);
  out << "t,u1,u2,r1,r2\n";
  const double dt = eq.forward.dt;
  for (Eigen::Index n = 0; n < eq.controls.u1.size(); ++n) {
    const double r1 = spec.gamma1 * std::abs(eq.controls.u1(n) - clip(raw1(n), spec.box1));
    const double r2 = spec.gamma2 * std::abs(eq.controls.u2(n) - clip(raw2(n), spec.box2));
    out << n * dt << ',' << eq.controls.u1(n) << ',' << eq.controls.u2(n) << ',' << r1 << ',' << r2 << '\n';
  }
}

void write_deviation_csv(std::ostream& out, const DeviationReport& report) {
  out << "player,direction,amplitude,delta_J,std_error,pass\n";
  for (const auto& r : report.records)
    out << r.player << ',' << r.direction << ',' << r.amplitude << ',' << r.delta_J << ',' << r.std_error << ','
        << (r.pass ? 1 : 0) << '\n';
}

}  // namespace hetspde
