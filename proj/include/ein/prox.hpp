#pragma once

#include <Eigen/Core>

namespace ein {

/// Group soft-thresholding, the proximal map of t * ||.||_2:
/// (1 - t / ||a||) a when ||a|| > t, otherwise 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> prox(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  using Result = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Scalar norm = a.norm();
  if (norm <= threshold) return Result::Zero(a.size());
  return (Scalar(1) - threshold / norm) * a;
}

}  // namespace ein
