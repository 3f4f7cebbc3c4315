#include "hetspde/grid.hpp"

#include <cmath>

namespace hetspde {

std::optional<Eigen::Index> zero_node(double x_min, double x_max, Eigen::Index n) {
  if (!(x_min < 0.0 && x_max > 0.0)) return std::nullopt;
  const double h = (x_max - x_min) / static_cast<double>(n - 1);
  const double position = -x_min / h;
  const double nearest = std::round(position);
  if (std::abs(position - nearest) > 1e-9) return std::nullopt;
  return static_cast<Eigen::Index>(nearest);
}

WeightedGrid::WeightedGrid(double x_min, double x_max, Eigen::Index n) : x_min_(x_min), x_max_(x_max) {
  if (n < 3) throw GridError("grid too small: need at least 3 nodes");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
    throw GridError("grid window must satisfy x_min < x_max");
  h_ = (x_max - x_min) / static_cast<double>(n - 1);
  nodes_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) nodes_(j) = x_min + h_ * static_cast<double>(j);
  nodes_(n - 1) = x_max;
  // An exact zero keeps the closed-left phase lookup unambiguous.
  if (auto j0 = zero_node(x_min, x_max, n)) nodes_(*j0) = 0.0;
  trapezoid_ = Eigen::VectorXd::Constant(n, h_);
  trapezoid_(0) = trapezoid_(n - 1) = 0.5 * h_;
  weights_ = Eigen::VectorXd::Ones(n);
}

WeightedGrid::WeightedGrid(double x_min, double x_max, Eigen::Index n, const CoefficientField& field)
    : WeightedGrid(x_min, x_max, n) {
  if (field.is_piecewise()) {
    interface_ = zero_node(x_min, x_max, n);
    if (!interface_ || *interface_ == 0 || *interface_ == n - 1)
      throw GridError("piecewise field: the interface x = 0 must be an interior grid node");
  }
  for (Eigen::Index j = 0; j < size(); ++j) weights_(j) = 1.0 / field.rho(nodes_(j));
}

WeightedGrid WeightedGrid::unweighted(double x_min, double x_max, Eigen::Index n) { return WeightedGrid(x_min, x_max, n); }

Eigen::VectorXd sample_on(const WeightedGrid& grid, const std::function<double(double)>& f) {
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) v(j) = f(grid.node(j));
  return v;
}

}  // namespace hetspde
