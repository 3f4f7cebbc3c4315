#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hetspde {

/// Singular or numerically unstable linear solve.
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n x n tridiagonal matrix stored by diagonals. lower(i) is entry (i, i-1),
/// upper(i) is entry (i, i+1); lower(0) and upper(n-1) are kept at zero.
template <typename Scalar>
class Tridiagonal {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tridiagonal() = default;
  explicit Tridiagonal(Eigen::Index n) : lower_(Vector::Zero(n)), diag_(Vector::Zero(n)), upper_(Vector::Zero(n)) {}

  Eigen::Index size() const { return diag_.size(); }

  Vector& lower() { return lower_; }
  Vector& diag() { return diag_; }
  Vector& upper() { return upper_; }
  const Vector& lower() const { return lower_; }
  const Vector& diag() const { return diag_; }
  const Vector& upper() const { return upper_; }

  Scalar operator()(Eigen::Index i, Eigen::Index j) const {
    if (j == i) return diag_(i);
    if (j == i - 1) return lower_(i);
    if (j == i + 1) return upper_(i);
    return Scalar(0);
  }

  template <typename Derived>
  Vector operator*(const Eigen::MatrixBase<Derived>& x) const {
    const Eigen::Index n = size();
    if (x.size() != n) throw std::invalid_argument("tridiagonal product: dimension mismatch");
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar acc = diag_(i) * x(i);
      if (i > 0) acc += lower_(i) * x(i - 1);
      if (i + 1 < n) acc += upper_(i) * x(i + 1);
      y(i) = acc;
    }
    return y;
  }

  Dense dense() const {
    const Eigen::Index n = size();
    Dense m = Dense::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i, i) = diag_(i);
      if (i > 0) m(i, i - 1) = lower_(i);
      if (i + 1 < n) m(i, i + 1) = upper_(i);
    }
    return m;
  }

  /// identity_scale * I + scale * this
  Tridiagonal affine(Scalar identity_scale, Scalar scale) const {
    Tridiagonal out(size());
    out.lower_ = scale * lower_;
    out.upper_ = scale * upper_;
    out.diag_ = (scale * diag_).array() + identity_scale;
    return out;
  }

 private:
  Vector lower_;
  Vector diag_;
  Vector upper_;
};

/// Thomas factorization (no pivoting) of a tridiagonal matrix. Intended for
/// the diagonally dominant implicit step matrices used throughout.
template <typename Scalar>
class TridiagonalLu {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TridiagonalLu() = default;
  explicit TridiagonalLu(const Tridiagonal<Scalar>& m) : lower_(m.lower()), inv_pivot_(m.size()), upper_(m.size()) {
    const Eigen::Index n = m.size();
    if (n == 0) throw std::invalid_argument("tridiagonal factorization of an empty matrix");
    const Scalar scale = m.diag().cwiseAbs().maxCoeff() + m.lower().cwiseAbs().maxCoeff() + m.upper().cwiseAbs().maxCoeff();
    Scalar prev_upper = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar pivot = m.diag()(i) - (i > 0 ? lower_(i) * prev_upper : Scalar(0));
      if (!(std::abs(pivot) > Scalar(1e-14) * scale)) throw SingularSystem("singular tridiagonal system at row " + std::to_string(i));
      inv_pivot_(i) = Scalar(1) / pivot;
      prev_upper = (i + 1 < n ? m.upper()(i) : Scalar(0)) * inv_pivot_(i);
      upper_(i) = prev_upper;
    }
  }

  Eigen::Index size() const { return inv_pivot_.size(); }

  template <typename Derived>
  void solve_in_place(Eigen::MatrixBase<Derived>& x) const {
    const Eigen::Index n = size();
    if (x.rows() != n) throw std::invalid_argument("tridiagonal solve: dimension mismatch");
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(0, c) *= inv_pivot_(0);
      for (Eigen::Index i = 1; i < n; ++i) x(i, c) = (x(i, c) - lower_(i) * x(i - 1, c)) * inv_pivot_(i);
      for (Eigen::Index i = n - 2; i >= 0; --i) x(i, c) -= upper_(i) * x(i + 1, c);
    }
  }

  /// Solves for every column of a row-major block at once; the sweep runs
  /// over rows, so the columns are processed together.
  void solve_rows_in_place(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& x) const {
    const Eigen::Index n = size();
    if (x.rows() != n) throw std::invalid_argument("tridiagonal solve: dimension mismatch");
    x.row(0) *= inv_pivot_(0);
    for (Eigen::Index i = 1; i < n; ++i) x.row(i) = (x.row(i) - lower_(i) * x.row(i - 1)) * inv_pivot_(i);
    for (Eigen::Index i = n - 2; i >= 0; --i) x.row(i) -= upper_(i) * x.row(i + 1);
  }

  template <typename Derived>
  Vector solve(const Eigen::MatrixBase<Derived>& b) const {
    Vector x = b;
    solve_in_place(x);
    return x;
  }

 private:
  Vector lower_;
  Vector inv_pivot_;
  Vector upper_;  // upper(i) / pivot(i)
};

}  // namespace hetspde
