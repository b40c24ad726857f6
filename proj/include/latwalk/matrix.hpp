#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "latwalk/errors.hpp"

namespace latwalk {

// Ambient dimension cap.  Matrices are dynamic-size but stack-allocated up
// to this bound, so trajectory loops never touch the heap.
inline constexpr int kMaxDim = 10;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

inline void check_dimension(int d) {
  if (d < 2 || d > kMaxDim) throw validation_error("dimension must be in [2, 10]");
}

// Largest singular value.
inline double operator_norm(const Mat& m) {
  return m.jacobiSvd().singularValues()(0);
}

// Rescales a nearly unimodular matrix so |det| returns to 1.  Orientation is
// preserved; a non-positive |det| is a hard failure.
inline void renormalize_det(Mat& m) {
  const double det = std::abs(m.determinant());
  if (!(det > 0.0) || !std::isfinite(det))
    throw numerical_error("matrix determinant is zero or not finite");
  m /= std::pow(det, 1.0 / static_cast<double>(m.rows()));
}

}  // namespace latwalk
