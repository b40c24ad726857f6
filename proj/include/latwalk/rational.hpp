#pragma once

#include <gmpxx.h>

#include <complex>
#include <utility>
#include <vector>

#include "latwalk/errors.hpp"

namespace latwalk {

using Rational = mpq_class;

// Dense matrix over Q; row-major.  Sized for chain work (hundreds of
// states), not for numerics.
class RationalMatrix {
 public:
  RationalMatrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    if (rows < 1 || cols < 1) throw validation_error("matrix size must be positive");
  }

  static RationalMatrix identity(int n) {
    RationalMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Rational& operator()(int i, int j) {
    return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
              static_cast<std::size_t>(j)];
  }
  const Rational& operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
              static_cast<std::size_t>(j)];
  }

  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.cols_ != b.rows_) throw validation_error("matrix product size mismatch");
    RationalMatrix out(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const Rational& aik = a(i, k);
        if (aik == 0) continue;
        for (int j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  // Row vector times matrix.
  std::vector<Rational> left_apply(const std::vector<Rational>& v) const {
    if (static_cast<int>(v.size()) != rows_)
      throw validation_error("vector/matrix size mismatch");
    std::vector<Rational> out(static_cast<std::size_t>(cols_));
    for (int i = 0; i < rows_; ++i) {
      if (v[static_cast<std::size_t>(i)] == 0) continue;
      for (int j = 0; j < cols_; ++j)
        out[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(i)] * (*this)(i, j);
    }
    return out;
  }

  // Exact solve of (*this) x = rhs by Gaussian elimination; throws on a
  // singular system.
  std::vector<Rational> solve(std::vector<Rational> rhs) const {
    if (rows_ != cols_ || static_cast<int>(rhs.size()) != rows_)
      throw validation_error("solve needs a square system");
    RationalMatrix m = *this;
    const int n = rows_;
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int col = 0; col < n; ++col) {
      int pivot = -1;
      for (int r = col; r < n; ++r)
        if (m(r, col) != 0) {
          pivot = r;
          break;
        }
      if (pivot < 0) throw numerical_error("singular rational system");
      if (pivot != col) {
        for (int j = 0; j < n; ++j) std::swap(m(pivot, j), m(col, j));
        std::swap(rhs[static_cast<std::size_t>(pivot)], rhs[static_cast<std::size_t>(col)]);
      }
      for (int r = col + 1; r < n; ++r) {
        if (m(r, col) == 0) continue;
        const Rational f = m(r, col) / m(col, col);
        for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
        rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
      }
    }
    std::vector<Rational> x(static_cast<std::size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
      Rational acc = rhs[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) acc -= m(i, j) * x[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] = acc / m(i, i);
    }
    return x;
  }

  // Monic characteristic polynomial det(lambda I - A), returned as
  // coefficients c[0..n] with p(lambda) = sum c[k] lambda^k (Faddeev-
  // LeVerrier recursion, exact).
  std::vector<Rational> char_poly() const {
    if (rows_ != cols_) throw validation_error("characteristic polynomial needs a square matrix");
    const int n = rows_;
    std::vector<Rational> c(static_cast<std::size_t>(n) + 1);
    c[static_cast<std::size_t>(n)] = 1;
    RationalMatrix m = identity(n);
    for (int k = 1; k <= n; ++k) {
      RationalMatrix am = (*this) * m;
      Rational tr = 0;
      for (int i = 0; i < n; ++i) tr += am(i, i);
      const Rational ck = -tr / k;
      c[static_cast<std::size_t>(n - k)] = ck;
      for (int i = 0; i < n; ++i) am(i, i) += ck;
      m = std::move(am);
    }
    return c;
  }

 private:
  int rows_, cols_;
  std::vector<Rational> a_;
};

// Horner evaluation of an exact polynomial at a complex double point.
inline std::complex<double> evaluate_poly(const std::vector<Rational>& coeffs,
                                          std::complex<double> z) {
  std::complex<double> acc(0.0, 0.0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = acc * z + std::complex<double>(it->get_d(), 0.0);
  return acc;
}

// Exact evaluation at a rational point.
inline Rational evaluate_poly_exact(const std::vector<Rational>& coeffs,
                                    const Rational& z) {
  Rational acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

}  // namespace latwalk
