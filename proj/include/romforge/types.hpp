#pragma once

#include <Eigen/Dense>

#include <cassert>

namespace romforge {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Dense order-3 tensor T(i, j, k).
///
/// Stored as an n0 x (n1*n2) matrix whose column j + n1*k holds the fibre
/// T(:, j, k), so that the bilinear contraction sum_jk T(i,j,k) x_j y_k is a
/// single matrix-vector product against vec(x y^T).
template <typename Scalar>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index n0, Index n1, Index n2)
      : n0_(n0), n1_(n1), n2_(n2), data_(MatrixX<Scalar>::Zero(n0, n1 * n2)) {}

  static Tensor3 Zero(Index n0, Index n1, Index n2) { return Tensor3(n0, n1, n2); }

  Index dim0() const { return n0_; }
  Index dim1() const { return n1_; }
  Index dim2() const { return n2_; }
  Index size() const { return n0_ * n1_ * n2_; }

  Scalar& operator()(Index i, Index j, Index k) { return data_(i, j + n1_ * k); }
  const Scalar& operator()(Index i, Index j, Index k) const { return data_(i, j + n1_ * k); }

  /// Matricized storage, n0 x (n1*n2).
  const MatrixX<Scalar>& unfolded() const { return data_; }
  MatrixX<Scalar>& unfolded() { return data_; }

  /// result_i = sum_jk T(i,j,k) x_j y_k
  template <typename DerivedX, typename DerivedY>
  VectorX<Scalar> contract(const Eigen::MatrixBase<DerivedX>& x,
                           const Eigen::MatrixBase<DerivedY>& y) const {
    assert(x.size() == n1_ && y.size() == n2_);
    const MatrixX<Scalar> outer = x * y.transpose();
    return data_ * outer.reshaped();
  }

  /// Matrix M with M(i,k) = sum_j T(i,j,k) x_j (partial contraction over j).
  template <typename DerivedX>
  MatrixX<Scalar> contract_middle(const Eigen::MatrixBase<DerivedX>& x) const {
    MatrixX<Scalar> out(n0_, n2_);
    for (Index k = 0; k < n2_; ++k) out.col(k) = data_.middleCols(n1_ * k, n1_) * x;
    return out;
  }

  /// Matrix M with M(i,j) = sum_k T(i,j,k) y_k (partial contraction over k).
  template <typename DerivedY>
  MatrixX<Scalar> contract_last(const Eigen::MatrixBase<DerivedY>& y) const {
    MatrixX<Scalar> out = MatrixX<Scalar>::Zero(n0_, n1_);
    for (Index k = 0; k < n2_; ++k) out += y(k) * data_.middleCols(n1_ * k, n1_);
    return out;
  }

  Tensor3& operator+=(const Tensor3& other) {
    assert(n0_ == other.n0_ && n1_ == other.n1_ && n2_ == other.n2_);
    data_ += other.data_;
    return *this;
  }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator*(Scalar s, Tensor3 t) {
    t.data_ *= s;
    return t;
  }

  Scalar max_abs() const { return data_.size() ? data_.cwiseAbs().maxCoeff() : Scalar(0); }
  bool all_finite() const { return data_.allFinite(); }

 private:
  Index n0_ = 0, n1_ = 0, n2_ = 0;
  MatrixX<Scalar> data_;
};

using Tensor = Tensor3<double>;

}  // namespace romforge
