#include "hetspde/forward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "hetspde/kernels.hpp"
#include "hetspde/operator.hpp"
#include "hetspde/parallel.hpp"

namespace hetspde {
namespace {

constexpr std::int64_t kBlock = 256;
// Paths advanced together by one worker.
constexpr std::int64_t kBatch = 32;

using RowBlock = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Implicit operator step (I - dt A)^{-1}, or the identity under the A = 0 hook.
class ImplicitStep {
 public:
  ImplicitStep(const ForwardProblem& problem, const WeightedGrid& grid, double dt) : identity_(problem.disable_operator) {
    if (!identity_) lu_ = TridiagonalLu<double>(assemble_operator(problem.field, grid).matrix.affine(1.0, -dt));
  }
  void apply(Eigen::VectorXd& v) const {
    if (!identity_) lu_.solve_in_place(v);
  }
  void apply(RowBlock& v) const {
    if (!identity_) lu_.solve_rows_in_place(v);
  }

 private:
  bool identity_;
  TridiagonalLu<double> lu_;
};

double control_at(const Eigen::VectorXd& u, std::int64_t n) { return n < u.size() ? u(n) : 0.0; }

}  // namespace

StateCoefficient StateCoefficient::zero() {
  StateCoefficient c;
  c.zero_ = true;
  c.state_independent_ = true;
  c.eval_ = [](double, const WeightedGrid&, const Eigen::VectorXd& y, double, double, Eigen::VectorXd& out) {
    out.setZero(y.size());
  };
  return c;
}

StateCoefficient StateCoefficient::pointwise(PointwiseCoefficient f) {
  StateCoefficient c;
  c.eval_ = [f = std::move(f)](double t, const WeightedGrid& grid, const Eigen::VectorXd& y, double u1, double u2,
                               Eigen::VectorXd& out) {
    out.resize(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) out(j) = f(t, grid.node(j), y(j), u1, u2);
  };
  return c;
}

StateCoefficient StateCoefficient::actuated(Eigen::VectorXd alpha1, Eigen::VectorXd alpha2) {
  StateCoefficient c;
  c.state_independent_ = true;
  c.eval_ = [a1 = std::move(alpha1), a2 = std::move(alpha2)](double, const WeightedGrid& grid,
                                                             const Eigen::VectorXd&, double u1, double u2,
                                                             Eigen::VectorXd& out) {
    grid.require_match(a1.size());
    out = u1 * a1 + u2 * a2;
  };
  return c;
}

StateCoefficient StateCoefficient::profile(Eigen::VectorXd values) {
  StateCoefficient c;
  c.zero_ = values.size() > 0 && values.isZero(0.0);
  c.state_independent_ = true;
  c.eval_ = [v = std::move(values)](double, const WeightedGrid& grid, const Eigen::VectorXd&, double, double,
                                    Eigen::VectorXd& out) {
    grid.require_match(v.size());
    out = v;
  };
  return c;
}

void StateCoefficient::evaluate(double t, const WeightedGrid& grid, const Eigen::VectorXd& y, double u1, double u2,
                                Eigen::VectorXd& out) const {
  eval_(t, grid, y, u1, u2, out);
}

ControlPair ControlPair::zero(std::int64_t n_steps) {
  return {Eigen::VectorXd::Zero(n_steps + 1), Eigen::VectorXd::Zero(n_steps + 1)};
}

ForwardSolution simulate_forward(const ForwardProblem& problem, const ControlPair& controls,
                                 const PathEnsemble& ensemble, const WeightedGrid& grid,
                                 const ForwardOptions& options) {
  grid.require_match(problem.xi.size());
  const std::int64_t N = ensemble.n_steps();
  const double dt = problem.horizon / static_cast<double>(N);
  if (std::abs(ensemble.horizon() - problem.horizon) > 1e-12 * problem.horizon)
    throw std::invalid_argument("simulate_forward: ensemble horizon differs from the problem horizon");

  ForwardSolution sol;
  sol.dt = dt;
  sol.controls = controls;
  sol.record_steps = options.record_steps;
  if (sol.record_steps.empty())
    for (std::int64_t n = 0; n <= N; ++n) sol.record_steps.push_back(n);
  for (std::int64_t r : sol.record_steps)
    if (r < 0 || r > N) throw std::invalid_argument("simulate_forward: record step out of range");
  std::vector<std::int64_t> slot(N + 1, -1);
  for (std::size_t r = 0; r < sol.record_steps.size(); ++r) slot[sol.record_steps[r]] = static_cast<std::int64_t>(r);

  const ImplicitStep step(problem, grid, dt);
  const Eigen::Index n = grid.size();
  const auto R = static_cast<Eigen::Index>(sol.record_steps.size());

  const bool drift = !problem.drift.is_zero();
  const bool noise = !problem.noise.is_zero();
  const bool shared = problem.drift.state_independent() && problem.noise.state_independent();

  // Advances paths [first, first + count) together; column b of Y is one path.
  auto run_batch = [&](std::int64_t first, std::int64_t count, Eigen::MatrixXd* out) {
    const auto B = static_cast<Eigen::Index>(count);
    Eigen::MatrixXd dB(N, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      dB.col(b) = ensemble.increments(first + b);
      out[b].resize(R, n);
    }
    RowBlock Y = problem.xi.replicate(1, B);
    Eigen::VectorXd kappa(n), sigma(n), y = Eigen::VectorXd::Zero(n);
    // A step may be recorded more than once; fill every matching row.
    auto record = [&](std::int64_t k) {
      if (slot[k] < 0) return;
      for (Eigen::Index r = 0; r < R; ++r)
        if (sol.record_steps[r] == k)
          for (Eigen::Index b = 0; b < B; ++b) out[b].row(r) = Y.col(b).transpose();
    };
    record(0);
    for (std::int64_t k = 0; k < N; ++k) {
      const double t = k * dt;
      const double u1 = control_at(controls.u1, k);
      const double u2 = control_at(controls.u2, k);
      if (shared) {
        if (drift) {
          problem.drift.evaluate(t, grid, y, u1, u2, kappa);
          Y.colwise() += dt * kappa;
        }
        if (noise) {
          problem.noise.evaluate(t, grid, y, u1, u2, sigma);
          Y.noalias() += sigma * dB.row(k);
        }
      } else {
        for (Eigen::Index b = 0; b < B; ++b) {
          y = Y.col(b);
          if (drift) problem.drift.evaluate(t, grid, y, u1, u2, kappa);
          if (noise) problem.noise.evaluate(t, grid, y, u1, u2, sigma);
          if (drift) y += dt * kappa;
          if (noise) y += sigma * dB(k, b);
          Y.col(b) = y;
        }
      }
      step.apply(Y);
      record(k + 1);
    }
  };

  const std::int64_t P = ensemble.n_paths();
  sol.mean = Eigen::MatrixXd::Zero(R, n);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(R, n);
  if (options.keep_paths) sol.paths.resize(P);
  std::vector<Eigen::MatrixXd> block(kBlock);
  std::int64_t count = 0;
  for (std::int64_t start = 0; start < P; start += kBlock) {
    const std::int64_t size = std::min(kBlock, P - start);
    const std::int64_t batches = (size + kBatch - 1) / kBatch;
    parallel_for(
        batches,
        [&](std::int64_t b) {
          const std::int64_t first = b * kBatch;
          run_batch(start + first, std::min(kBatch, size - first), block.data() + first);
        },
        options.threads);
    for (std::int64_t i = 0; i < size; ++i) {
      ++count;
      const Eigen::MatrixXd delta = block[i] - sol.mean;
      sol.mean += delta / static_cast<double>(count);
      m2.array() += delta.array() * (block[i] - sol.mean).array();
      if (options.keep_paths) sol.paths[start + i] = block[i];
    }
  }
  sol.variance = count > 1 ? (m2 / static_cast<double>(count - 1)).eval() : Eigen::MatrixXd::Zero(R, n);
  return sol;
}

bool PicardResult::exact_convergence() const { return std::find(exact.begin(), exact.end(), true) != exact.end(); }

PicardResult picard_iterate(const ForwardProblem& problem, const PathEnsemble& ensemble, const WeightedGrid& grid,
                            int n_iter, int threads) {
  if (n_iter < 2) throw std::invalid_argument("picard_iterate: n_iter must be at least 2");
  grid.require_match(problem.xi.size());
  const std::int64_t N = ensemble.n_steps();
  const double dt = problem.horizon / static_cast<double>(N);
  const ImplicitStep step(problem, grid, dt);
  const Eigen::Index n = grid.size();

  struct PathOutput {
    Eigen::MatrixXd sq_diff;  // n_iter x (N+1)
    Eigen::MatrixXd last;     // final iterate, (N+1) x n
  };

  auto run_path = [&](std::int64_t p, PathOutput& out) {
    const Eigen::VectorXd dB = ensemble.increments(p);
    out.sq_diff = Eigen::MatrixXd::Zero(n_iter, N + 1);
    Eigen::MatrixXd old(N + 1, n), cur(N + 1, n);
    Eigen::VectorXd y = problem.xi;
    old.row(0) = y.transpose();
    for (std::int64_t k = 0; k < N; ++k) {
      step.apply(y);
      old.row(k + 1) = y.transpose();
    }
    Eigen::VectorXd prev(n), kappa(n), sigma(n);
    for (int it = 1; it <= n_iter; ++it) {
      y = problem.xi;
      cur.row(0) = y.transpose();
      for (std::int64_t k = 0; k < N; ++k) {
        prev = old.row(k).transpose();
        problem.drift.evaluate(k * dt, grid, prev, 0.0, 0.0, kappa);
        problem.noise.evaluate(k * dt, grid, prev, 0.0, 0.0, sigma);
        y += dt * kappa + sigma * dB(k);
        step.apply(y);
        cur.row(k + 1) = y.transpose();
      }
      for (std::int64_t k = 0; k <= N; ++k) {
        const Eigen::VectorXd d = (cur.row(k) - old.row(k)).transpose();
        out.sq_diff(it - 1, k) = inner_product(d, d, grid);
      }
      old.swap(cur);
    }
    out.last = old;
  };

  const std::int64_t P = ensemble.n_paths();
  Eigen::MatrixXd mean_sq = Eigen::MatrixXd::Zero(n_iter, N + 1);
  PicardResult result;
  result.mean_final = Eigen::MatrixXd::Zero(N + 1, n);
  std::vector<PathOutput> block(kBlock);
  for (std::int64_t start = 0; start < P; start += kBlock) {
    const std::int64_t size = std::min(kBlock, P - start);
    parallel_for(size, [&](std::int64_t i) { run_path(start + i, block[i]); }, threads);
    for (std::int64_t i = 0; i < size; ++i) {
      mean_sq += block[i].sq_diff;
      result.mean_final += block[i].last;
    }
  }
  mean_sq /= static_cast<double>(P);
  result.mean_final /= static_cast<double>(P);

  for (int it = 0; it < n_iter; ++it) result.increment_norms.push_back(mean_sq.row(it).maxCoeff());
  for (int it = 1; it < n_iter; ++it) {
    const double prev = result.increment_norms[it - 1];
    const double cur = result.increment_norms[it];
    if (prev == 0.0 || cur == 0.0) {
      result.ratios.push_back(0.0);
      result.exact.push_back(true);
    } else {
      result.ratios.push_back(cur / prev);
      result.exact.push_back(false);
    }
  }
  return result;
}

double picard_bound(const ForwardProblem& problem, double window) {
  const double L2 = problem.lipschitz * problem.lipschitz;
  const double M2 = problem.semigroup_bound * problem.semigroup_bound;
  return 2.0 * M2 * (window * window * L2 + 4.0 * window * L2);
}

KernelProvider gaussian_provider(const CoefficientField& field, const WeightedGrid& grid) {
  const GaussianKernelParams params = GaussianKernelParams::forward_semigroup(field);
  return [params, grid](double tau) { return gaussian_kernel_matrix(params, tau, grid); };
}

KernelProvider two_phase_provider(const CoefficientField& field, const WeightedGrid& grid, int steps_per_unit_time) {
  // The forward semigroup of kappa d_xx + b d_x is the backward generator with drift -b.
  const auto& p = field.phases();
  PiecewiseConstantCoefficients flipped = p;
  flipped.b_minus = -p.b_minus;
  flipped.b_plus = -p.b_plus;
  const CoefficientField reversed = CoefficientField::piecewise(flipped);
  return [reversed, grid, steps_per_unit_time](double tau) {
    const int steps = std::max(4, static_cast<int>(std::ceil(tau * steps_per_unit_time)));
    const TwoPhaseKernel k = build_two_phase_kernel(reversed, 0.0, tau, grid, steps);
    return Eigen::MatrixXd(k.density * grid.trapezoid().asDiagonal());
  };
}

double mild_residual(const ForwardSolution& solution, const ForwardProblem& problem, const PathEnsemble& ensemble,
                     const WeightedGrid& grid, const KernelProvider& kernel,
                     const std::vector<std::int64_t>& checkpoints) {
  const std::int64_t N = ensemble.n_steps();
  if (solution.paths.empty() || static_cast<std::int64_t>(solution.record_steps.size()) != N + 1)
    throw std::invalid_argument("mild_residual: needs every step recorded with paths kept");
  const double dt = solution.dt;
  std::map<std::int64_t, Eigen::MatrixXd> cache;
  auto P = [&](std::int64_t lag) -> const Eigen::MatrixXd& {
    auto it = cache.find(lag);
    if (it == cache.end()) it = cache.emplace(lag, kernel(lag * dt)).first;
    return it->second;
  };
  const Eigen::Index n = grid.size();
  double worst = 0.0;
  for (std::int64_t c : checkpoints) {
    if (c < 1 || c > N) throw std::invalid_argument("mild_residual: checkpoint out of range");
    double total = 0.0;
    for (std::size_t p = 0; p < solution.paths.size(); ++p) {
      const Eigen::MatrixXd& Y = solution.paths[p];
      const Eigen::VectorXd dB = ensemble.increments(static_cast<std::int64_t>(p));
      Eigen::VectorXd mild = P(c) * problem.xi;
      Eigen::VectorXd kappa(n), sigma(n);
      for (std::int64_t m = 0; m < c; ++m) {
        const Eigen::VectorXd ym = Y.row(m).transpose();
        const double u1 = m < solution.controls.u1.size() ? solution.controls.u1(m) : 0.0;
        const double u2 = m < solution.controls.u2.size() ? solution.controls.u2(m) : 0.0;
        problem.drift.evaluate(m * dt, grid, ym, u1, u2, kappa);
        problem.noise.evaluate(m * dt, grid, ym, u1, u2, sigma);
        mild += P(c - m) * (dt * kappa + sigma * dB(m));
      }
      const Eigen::VectorXd diff = Y.row(c).transpose() - mild;
      total += norm(diff, grid);
    }
    worst = std::max(worst, total / static_cast<double>(solution.paths.size()));
  }
  return worst;
}

void write_forward_stats_csv(std::ostream& out, const ForwardSolution& solution, const WeightedGrid& grid) {
  out << "t,x,mean,var\n";
  out.precision(12);
  for (std::size_t r = 0; r < solution.record_steps.size(); ++r)
    for (Eigen::Index j = 0; j < grid.size(); ++j)
      out << solution.record_steps[r] * solution.dt << ',' << grid.node(j) << ',' << solution.mean(r, j) << ','
          << solution.variance(r, j) << '\n';
}

void write_forward_paths_csv(std::ostream& out, const ForwardSolution& solution, const WeightedGrid& grid,
                             std::int64_t max_paths) {
  out << "path,t,x,y\n";
  out.precision(12);
  const auto P = std::min<std::int64_t>(max_paths, static_cast<std::int64_t>(solution.paths.size()));
  for (std::int64_t p = 0; p < P; ++p)
    for (std::size_t r = 0; r < solution.record_steps.size(); ++r)
      for (Eigen::Index j = 0; j < grid.size(); ++j)
        out << p << ',' << solution.record_steps[r] * solution.dt << ',' << grid.node(j) << ','
            << solution.paths[p](r, j) << '\n';
}

}  // namespace hetspde
