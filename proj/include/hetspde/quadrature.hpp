#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace hetspde {

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> gauss_legendre(int n) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  Matrix J = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const Scalar beta = Scalar(k) / std::sqrt(Scalar(4 * k * k - 1));
    J(k, k - 1) = J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(J);
  Vector nodes = eig.eigenvalues();
  Vector weights = Scalar(2) * eig.eigenvectors().row(0).transpose().array().square();
  return {nodes, weights};
}

}  // namespace hetspde
