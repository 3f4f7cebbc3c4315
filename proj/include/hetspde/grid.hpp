#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <stdexcept>

#include "hetspde/coeffs.hpp"

namespace hetspde {

/// Thrown for invalid grids (too few nodes, misplaced interface, size mismatch).
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform grid on [x_min, x_max] carrying the weights w_j = 1/rho(x_j) of
/// the space L^2(dx / rho). For piecewise fields x = 0 is forced onto a node.
class WeightedGrid {
 public:
  WeightedGrid(double x_min, double x_max, Eigen::Index n, const CoefficientField& field);
  static WeightedGrid unweighted(double x_min, double x_max, Eigen::Index n);

  Eigen::Index size() const { return nodes_.size(); }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double spacing() const { return h_; }
  double node(Eigen::Index j) const { return nodes_(j); }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Trapezoid quadrature weights c_j h (half weight at the two ends).
  const Eigen::VectorXd& trapezoid() const { return trapezoid_; }
  std::optional<Eigen::Index> interface_index() const { return interface_; }

  void require_match(Eigen::Index values) const {
    if (values != size()) throw GridError("field length does not match the grid");
  }

 private:
  WeightedGrid(double x_min, double x_max, Eigen::Index n);

  double x_min_;
  double x_max_;
  double h_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd trapezoid_;
  std::optional<Eigen::Index> interface_;
};

/// Node index of x = 0 on a uniform grid, if 0 is (up to 1e-9 h) a node.
std::optional<Eigen::Index> zero_node(double x_min, double x_max, Eigen::Index n);

/// <u, v> in the weighted space: sum_j c_j u_j v_j w_j h.
template <typename DerivedU, typename DerivedV>
double inner_product(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
                     const WeightedGrid& grid) {
  grid.require_match(u.size());
  grid.require_match(v.size());
  return (u.array() * v.array() * grid.weights().array() * grid.trapezoid().array()).sum();
}

template <typename Derived>
double norm(const Eigen::MatrixBase<Derived>& u, const WeightedGrid& grid) {
  return std::sqrt(inner_product(u, u, grid));
}

/// Unweighted trapezoid pairing sum_j c_j u_j v_j h.
template <typename DerivedU, typename DerivedV>
double l2_inner_product(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
                        const WeightedGrid& grid) {
  grid.require_match(u.size());
  grid.require_match(v.size());
  return (u.array() * v.array() * grid.trapezoid().array()).sum();
}

/// Centered differences inside, one-sided first differences at the ends.
template <typename Derived>
Eigen::VectorXd centered_derivative(const Eigen::MatrixBase<Derived>& u, const WeightedGrid& grid) {
  grid.require_match(u.size());
  const Eigen::Index n = u.size();
  const double h = grid.spacing();
  Eigen::VectorXd d(n);
  for (Eigen::Index j = 1; j + 1 < n; ++j) d(j) = (u(j + 1) - u(j - 1)) / (2.0 * h);
  d(0) = (u(1) - u(0)) / h;
  d(n - 1) = (u(n - 1) - u(n - 2)) / h;
  return d;
}

Eigen::VectorXd sample_on(const WeightedGrid& grid, const std::function<double(double)>& f);

}  // namespace hetspde
