#include "hetspde/bspde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "hetspde/parallel.hpp"
#include "hetspde/quadrature.hpp"
#include "hetspde/random.hpp"
#include "hetspde/theta_scheme.hpp"

namespace hetspde {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

struct GaussMoments {
  double mass;     // integral of h(y) N(y; m, s^2)
  double tilted;   // integral of h(y) (y - m) / s^2 N(y; m, s^2)
};

// Midpoint rule over m +- window s; cells are symmetric about m.
template <typename F>
GaussMoments gauss_moments(F&& h, double m, double s, const ClosedFormOptions& o) {
  const double dz = 2.0 * o.window_sd / o.points;
  double mass = 0.0, tilted = 0.0;
  for (int k = 0; k < o.points; ++k) {
    const double z = (k + 0.5 - 0.5 * o.points) * dz;
    const double w = kInvSqrt2Pi * std::exp(-0.5 * z * z) * dz;
    const double v = h(m + s * z);
    mass += w * v;
    tilted += w * v * z / s;
  }
  return {mass, tilted};
}

Eigen::VectorXd q_from_u(const Eigen::VectorXd& u, const Eigen::VectorXd& sigma, double h) {
  const Eigen::Index n = u.size();
  Eigen::VectorXd q(n);
  for (Eigen::Index j = 1; j + 1 < n; ++j) q(j) = sigma(j) * (u(j + 1) - u(j - 1)) / (2.0 * h);
  q(0) = sigma(0) * (u(1) - u(0)) / h;
  q(n - 1) = sigma(n - 1) * (u(n - 1) - u(n - 2)) / h;
  return q;
}

// Second-order one-sided derivatives at node j0 from the left / right.
double left_derivative(const Eigen::VectorXd& u, Eigen::Index j0, double h) {
  return (3.0 * u(j0) - 4.0 * u(j0 - 1) + u(j0 - 2)) / (2.0 * h);
}
double right_derivative(const Eigen::VectorXd& u, Eigen::Index j0, double h) {
  return (-3.0 * u(j0) + 4.0 * u(j0 + 1) - u(j0 + 2)) / (2.0 * h);
}

}  // namespace

PointValue solve_closed_form(const LinearBspdeProblem& problem, double t, double x, const ClosedFormOptions& options) {
  if (!(t < problem.horizon)) throw std::domain_error("solve_closed_form: need t < T");
  const auto values = problem.field.constant_values();
  if (!values) throw UnsupportedKind("solve_closed_form: field does not have constant coefficients");
  const double sigma = std::sqrt(values->rho * values->a);
  const double beta = values->b + sigma * problem.gamma;
  const double tau = problem.horizon - t;

  const double s = sigma * std::sqrt(tau);
  const GaussMoments terminal = gauss_moments(problem.g, x - beta * tau, s, options);
  const double growth = std::exp(problem.c * tau);
  double u = growth * terminal.mass;
  double du = growth * terminal.tilted;

  if (problem.f) {
    const auto [nodes, weights] = gauss_legendre<double>(options.time_nodes);
    for (int k = 0; k < options.time_nodes; ++k) {
      const double lag = 0.5 * tau * (nodes(k) + 1.0);
      const double time = t + lag;
      const GaussMoments src = gauss_moments([&](double y) { return problem.f(time, y); }, x - beta * lag,
                                             sigma * std::sqrt(lag), options);
      const double w = 0.5 * tau * weights(k) * std::exp(problem.c * lag);
      u += w * src.mass;
      du += w * src.tilted;
    }
  }
  return {u, sigma * du};
}

BackwardSolution closed_form_on_grid(const LinearBspdeProblem& problem, const WeightedGrid& grid, int n_steps,
                                     const ClosedFormOptions& options) {
  if (n_steps < 1) throw std::invalid_argument("closed_form_on_grid: n_steps must be positive");
  const Eigen::Index n = grid.size();
  BackwardSolution sol;
  sol.method = BackwardMethod::kClosedForm;
  sol.times = Eigen::VectorXd::LinSpaced(n_steps + 1, 0.0, problem.horizon);
  sol.u.resize(n_steps + 1, n);
  sol.q.resize(n_steps + 1, n);
  const double sigma = problem.field.sigma(0.0);
  for (int k = 0; k < n_steps; ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      const PointValue v = solve_closed_form(problem, sol.times(k), grid.node(j), options);
      sol.u(k, j) = v.u;
      sol.q(k, j) = v.q;
    }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = grid.node(j);
    const double d = derivative_step(x);
    sol.u(n_steps, j) = problem.g(x);
    sol.q(n_steps, j) = sigma * (problem.g(x + d) - problem.g(x - d)) / (2.0 * d);
  }
  return sol;
}

BackwardSolution solve_backward_generator(const Tridiagonal<double>& L, double c,
                                          const std::function<Eigen::VectorXd(double t)>& source,
                                          const Eigen::VectorXd& terminal, double horizon, const WeightedGrid& grid,
                                          int n_steps, const CoefficientField& field, BackwardMethod method) {
  if (n_steps < 1) throw std::invalid_argument("backward solver: n_steps must be positive");
  grid.require_match(terminal.size());
  const Eigen::Index n = grid.size();
  const double dt = horizon / n_steps;
  const CrankNicolson stepper(L.affine(c, 1.0), dt);

  BackwardSolution sol;
  sol.method = method;
  sol.times = Eigen::VectorXd::LinSpaced(n_steps + 1, 0.0, horizon);
  sol.u.resize(n_steps + 1, n);
  sol.q.resize(n_steps + 1, n);
  Eigen::VectorXd sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma(j) = field.sigma(grid.node(j));

  Eigen::VectorXd v = terminal;
  sol.u.row(n_steps) = v.transpose();
  for (int k = n_steps - 1; k >= 0; --k) {
    const double t_old = sol.times(k + 1);
    const double t_new = sol.times(k);
    if (!source) {
      if (k == n_steps - 1) stepper.rannacher_step(v);
      else stepper.step(v);
    } else if (k == n_steps - 1) {
      stepper.rannacher_step(v, source(t_old - 0.5 * dt), source(t_new));
    } else {
      stepper.step(v, source(t_old), source(t_new));
    }
    sol.u.row(k) = v.transpose();
  }

  for (int k = 0; k <= n_steps; ++k) sol.q.row(k) = q_from_u(sol.u.row(k).transpose(), sigma, grid.spacing()).transpose();
  if (field.is_piecewise()) {
    const Eigen::Index j0 = *grid.interface_index();
    sol.interface_index = j0;
    const auto& p = field.phases();
    const double s_minus = std::sqrt(p.rho_minus * p.a_minus);
    const double s_plus = std::sqrt(p.rho_plus * p.a_plus);
    sol.q_minus.resize(n_steps + 1);
    sol.q_plus.resize(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) {
      const Eigen::VectorXd u = sol.u.row(k).transpose();
      sol.q_minus(k) = j0 >= 2 ? s_minus * left_derivative(u, j0, grid.spacing()) : sol.q(k, j0);
      sol.q_plus(k) = j0 + 2 < n ? s_plus * right_derivative(u, j0, grid.spacing()) : sol.q(k, j0);
      sol.q(k, j0) = sol.q_minus(k);
    }
  }
  return sol;
}

BackwardSolution solve_backward_fd(const LinearBspdeProblem& problem, const WeightedGrid& grid, int n_steps) {
  if (!problem.g) throw std::invalid_argument("solve_backward_fd: terminal data g is required");
  const DiscreteOperator L = assemble_backward_generator(problem.field, problem.gamma, grid);
  std::function<Eigen::VectorXd(double)> source;
  if (problem.f) source = [&](double t) { return sample_on(grid, [&](double x) { return problem.f(t, x); }); };
  const BackwardMethod method = problem.field.is_piecewise() ? BackwardMethod::kFdTwoPhase : BackwardMethod::kFdSmooth;
  return solve_backward_generator(L.matrix, problem.c, source, sample_on(grid, problem.g), problem.horizon, grid,
                                  n_steps, problem.field, method);
}

TransmissionJump transmission_residual(const BackwardSolution& solution, const CoefficientField& field,
                                       const WeightedGrid& grid, Eigen::Index t_index) {
  if (!field.is_piecewise() || !grid.interface_index())
    throw UnsupportedKind("transmission_residual needs a piecewise field with the interface on a node");
  const Eigen::Index j0 = *grid.interface_index();
  if (j0 < 3 || j0 + 3 >= grid.size()) throw GridError("transmission_residual: interface too close to the boundary");
  if (t_index < 0 || t_index >= solution.u.rows()) throw std::out_of_range("transmission_residual: bad time index");
  const Eigen::VectorXd u = solution.u.row(t_index).transpose();
  const double from_left = 3.0 * u(j0 - 1) - 3.0 * u(j0 - 2) + u(j0 - 3);
  const double from_right = 3.0 * u(j0 + 1) - 3.0 * u(j0 + 2) + u(j0 + 3);
  const auto& p = field.phases();
  const double k_minus = 0.5 * p.rho_minus * p.a_minus;
  const double k_plus = 0.5 * p.rho_plus * p.a_plus;
  const double h = grid.spacing();
  return {std::abs(from_left - from_right),
          std::abs(k_minus * left_derivative(u, j0, h) - k_plus * right_derivative(u, j0, h))};
}

McEstimate feynman_kac_mc(const LinearBspdeProblem& problem, double t, double x, std::int64_t n_paths,
                          std::int64_t n_steps, std::uint64_t seed, InterfaceScheme scheme, int threads) {
  if (!(t < problem.horizon)) throw std::domain_error("feynman_kac_mc: need t < T");
  if (n_paths < 100) throw std::invalid_argument("feynman_kac_mc: need at least 100 paths");
  if (n_steps < 1) throw std::invalid_argument("feynman_kac_mc: n_steps must be positive");
  const CoefficientField& field = problem.field;
  const double tau = problem.horizon - t;
  const double dt = tau / static_cast<double>(n_steps);
  const double sqrt_dt = std::sqrt(dt);
  const double growth = std::exp(problem.c * tau);
  const bool skew = field.is_piecewise() && scheme == InterfaceScheme::kSkewExact;

  double s_minus = 0, s_plus = 0, mu_minus = 0, mu_plus = 0, p_right = 0.5;
  if (skew) {
    const auto& p = field.phases();
    s_minus = std::sqrt(p.rho_minus * p.a_minus);
    s_plus = std::sqrt(p.rho_plus * p.a_plus);
    mu_minus = -(p.b_minus + s_minus * problem.gamma) / s_minus;
    mu_plus = -(p.b_plus + s_plus * problem.gamma) / s_plus;
    p_right = s_plus / (s_plus + s_minus);
  }

  std::vector<double> payoff(static_cast<std::size_t>(n_paths));
  auto run_path = [&](std::int64_t path) {
    std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(path), 0x464b4d43ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double X = x;
    // unit-diffusion coordinate Y = X / sigma(X) for the skew scheme
    double Y = skew ? x / (x <= 0.0 ? s_minus : s_plus) : 0.0;
    double running = 0.0;
    for (std::int64_t k = 0; k < n_steps; ++k) {
      const double s = t + k * dt;
      if (problem.f) running += std::exp(problem.c * (s - t)) * problem.f(s, X) * dt;
      if (skew) {
        const double start = Y + (Y <= 0.0 ? mu_minus : mu_plus) * dt;
        double end = start + sqrt_dt * normal(rng);
        bool hit = (start <= 0.0) != (end <= 0.0) || start == 0.0;
        if (!hit) {
          const double exponent = 2.0 * start * end / dt;
          // bridge crossing probability, negligible far from the interface
          if (exponent < 40.0) hit = uniform(rng) < std::exp(-exponent);
        }
        if (hit) end = uniform(rng) < p_right ? std::abs(end) : -std::abs(end);
        Y = end;
        X = Y * (Y <= 0.0 ? s_minus : s_plus);
      } else {
        const double sigma = field.sigma(X);
        const double mu = -(field.b(X) + sigma * problem.gamma);
        X += mu * dt + sigma * sqrt_dt * normal(rng);
      }
    }
    payoff[path] = growth * problem.g(X) + running;
  };
  parallel_for(n_paths, run_path, threads);

  double mean = 0.0, m2 = 0.0;
  for (std::int64_t i = 0; i < n_paths; ++i) {
    const double delta = payoff[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (payoff[i] - mean);
  }
  const double var = m2 / static_cast<double>(n_paths - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_paths))};
}

double q_consistency(const BackwardSolution& solution, const CoefficientField& field, const WeightedGrid& grid) {
  grid.require_match(solution.u.cols());
  const double h = grid.spacing();
  const Eigen::Index n = grid.size();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < solution.u.rows(); ++k)
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
      if (grid.interface_index() && j == *grid.interface_index()) continue;
      const double d = field.sigma(grid.node(j)) * (solution.u(k, j + 1) - solution.u(k, j - 1)) / (2.0 * h);
      worst = std::max(worst, std::abs(solution.q(k, j) - d));
    }
  return worst;
}

void write_backward_csv(std::ostream& out, const BackwardSolution& solution, const WeightedGrid& grid,
                        int time_stride) {
  out << "t,x,u,q\n";
  out.precision(12);
  for (Eigen::Index k = 0; k < solution.u.rows(); k += std::max(1, time_stride))
    for (Eigen::Index j = 0; j < grid.size(); ++j)
      out << solution.times(k) << ',' << grid.node(j) << ',' << solution.u(k, j) << ',' << solution.q(k, j) << '\n';
}

}  // namespace hetspde
