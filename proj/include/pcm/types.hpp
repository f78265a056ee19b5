#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iostream>
#include <string_view>

namespace pcm {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXd = RowMatrix<double>;
using Index = Eigen::Index;

/// Non-fatal diagnostics go to stderr with a fixed prefix.
inline void warn(std::string_view message) { std::cerr << "pcm: warning: " << message << '\n'; }

/// Cosine similarity with the convention cos(0, x) = 0.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.cwiseProduct(b).sum() / (na * nb);
}

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index k = 1; k < v.size(); ++k)
    if (v(k) > v(best)) best = k;
  return best;
}

}  // namespace pcm
