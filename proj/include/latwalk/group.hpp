#pragma once

#include <cmath>
#include <utility>

#include "latwalk/matrix.hpp"

namespace latwalk {

// Determinant drift beyond this triggers renormalization.
inline constexpr double kDetDrift = 1e-12;
// Determinant error beyond this rejects the matrix outright.
inline constexpr double kDetTolerance = 1e-9;

// Element of SL_d(R), d in [2, 10].  The determinant is validated at
// construction and pinned back to 1 when accumulated roundoff exceeds
// kDetDrift.
class GroupElement {
 public:
  // Accepts any Eigen expression; size is validated before the bounded
  // member is touched, so oversized inputs fail cleanly.
  template <typename Derived>
  explicit GroupElement(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols())
      throw validation_error("group element must be square");
    check_dimension(static_cast<int>(m.rows()));
    m_ = m;
    const double det = m_.determinant();
    if (!(std::abs(det - 1.0) <= kDetTolerance))
      throw validation_error("group element determinant must be 1");
    if (std::abs(det - 1.0) > kDetDrift) renormalize_det(m_);
  }

  static GroupElement identity(int d) {
    check_dimension(d);
    return GroupElement(Mat::Identity(d, d));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }

  GroupElement inverse() const {
    Mat inv = m_.partialPivLu().solve(Mat::Identity(dim(), dim()));
    return GroupElement(std::move(inv));
  }

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    if (a.dim() != b.dim())
      throw validation_error("group element dimension mismatch");
    return GroupElement(a.m_ * b.m_);
  }

  bool approx_equal(const GroupElement& o, double tol) const {
    return dim() == o.dim() && (m_ - o.m_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Mat m_;
};

}  // namespace latwalk
