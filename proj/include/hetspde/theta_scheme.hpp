#pragma once

#include <Eigen/Core>

#include "hetspde/tridiagonal.hpp"

namespace hetspde {

/// Time stepper for v' = M v + s(t) with tridiagonal M: Crank-Nicolson steps
/// and the implicit-Euler half steps of the Rannacher start.
class CrankNicolson {
 public:
  CrankNicolson(const Tridiagonal<double>& M, double dt)
      : M_(M), dt_(dt), implicit_(M.affine(1.0, -0.5 * dt)) {}

  double dt() const { return dt_; }

  /// v <- (I - dt/2 M)^{-1} [(I + dt/2 M) v + dt/2 (s_old + s_new)].
  template <typename Derived>
  void step(Eigen::MatrixBase<Derived>& v) const {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      auto col = v.col(c);
      Eigen::VectorXd rhs = col + 0.5 * dt_ * (M_ * col);
      implicit_.solve_in_place(rhs);
      col = rhs;
    }
  }

  void step(Eigen::VectorXd& v, const Eigen::VectorXd& s_old, const Eigen::VectorXd& s_new) const {
    Eigen::VectorXd rhs = v + 0.5 * dt_ * (M_ * v) + 0.5 * dt_ * (s_old + s_new);
    implicit_.solve_in_place(rhs);
    v = rhs;
  }

  /// One full step as two implicit-Euler steps of size dt/2.
  template <typename Derived>
  void rannacher_step(Eigen::MatrixBase<Derived>& v) const {
    implicit_.solve_in_place(v);
    implicit_.solve_in_place(v);
  }

  void rannacher_step(Eigen::VectorXd& v, const Eigen::VectorXd& s_mid, const Eigen::VectorXd& s_new) const {
    v += 0.5 * dt_ * s_mid;
    implicit_.solve_in_place(v);
    v += 0.5 * dt_ * s_new;
    implicit_.solve_in_place(v);
  }

 private:
  Tridiagonal<double> M_;
  double dt_;
  // I - dt/2 M serves both the CN step and an implicit-Euler step of dt/2.
  TridiagonalLu<double> implicit_;
};

}  // namespace hetspde
