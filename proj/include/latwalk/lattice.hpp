#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "latwalk/group.hpp"
#include "latwalk/matrix.hpp"

namespace latwalk {

// Node budget for shortest-vector / sphere enumeration.
inline constexpr std::uint64_t kEnumBudget = 10'000'000;
// Lovász parameter for LLL at d >= 3.
inline constexpr double kLllDelta = 0.99;
// Iteration guard for the reduction loops.
inline constexpr int kMaxReductionIters = 100'000;
// Orthogonality-defect bound beyond which an input basis is treated as
// numerically singular: with unit covolume, prod(col norms)/|det| is the
// effective condition measure that controls how many digits reduction can
// lose.  (A well-reduced but very eccentric basis has small defect and is
// fine; two nearly parallel columns are not.)
inline constexpr double kSingularDefect = 1e12;

inline double orthogonality_defect(const Mat& b) {
  double prod = 1.0;
  for (int j = 0; j < b.cols(); ++j) prod *= b.col(j).norm();
  const double det = std::abs(b.determinant());
  if (!(det > 0.0) || !std::isfinite(det)) return std::numeric_limits<double>::infinity();
  return prod / det;
}

// Upper bound on lambda_1 for a unit-covolume lattice (Hermite).
inline double hermite_bound(int d) {
  return std::pow(4.0 / 3.0, 0.25 * (d - 1));
}

// Lagrange-Gauss reduction for d = 2; on exit |col0| <= |col1| and
// |<col0, col1>| <= |col0|^2 / 2 up to the rounding scale of the longer
// column, so the columns attain both successive minima to double precision.
inline void lagrange_reduce(Mat& b) {
  for (int iter = 0; iter < kMaxReductionIters; ++iter) {
    if (b.col(0).squaredNorm() > b.col(1).squaredNorm()) b.col(0).swap(b.col(1));
    const double mu = b.col(0).dot(b.col(1)) / b.col(0).squaredNorm();
    // Ties at half-integers round toward zero; a coefficient of exactly
    // one half is already reduced, and the tie-break keeps the norm
    // strictly decreasing, so the loop cannot oscillate.
    double m = std::round(mu);
    if (std::abs(mu - std::trunc(mu)) == 0.5) m = std::trunc(mu);
    if (m == 0.0) return;
    const Vec candidate = b.col(1) - m * b.col(0);
    // When the norms differ by many orders of magnitude, rounding can erase
    // the tiny exact decrease of a near-half coefficient step and the update
    // becomes an exact two-cycle.  Accepting only strict norm progress keeps
    // the loop finite; the basis is then reduced up to that rounding scale,
    // which is the best double precision can represent.
    if (candidate.squaredNorm() >= b.col(1).squaredNorm()) return;
    b.col(1) = candidate;
  }
  throw numerical_error("Lagrange-Gauss reduction did not terminate");
}

// Textbook LLL for d >= 3.  Gram-Schmidt data is recomputed after each swap;
// at d <= 10 this costs nothing and avoids update-formula drift.
inline void lll_reduce(Mat& b, double delta = kLllDelta) {
  const int d = static_cast<int>(b.cols());
  Mat mu = Mat::Zero(d, d);
  Vec norms = Vec::Zero(d);
  auto gram_schmidt = [&] {
    Mat star = b;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < i; ++j) {
        mu(i, j) = b.col(i).dot(star.col(j)) / norms(j);
        star.col(i) -= mu(i, j) * star.col(j);
      }
      norms(i) = star.col(i).squaredNorm();
      if (!(norms(i) > 0.0))
        throw numerical_error("numerically singular basis in LLL");
    }
  };
  gram_schmidt();
  int k = 1;
  for (int iter = 0; iter < kMaxReductionIters; ++iter) {
    for (int j = k - 1; j >= 0; --j) {
      const double r = std::round(mu(k, j));
      if (r != 0.0) {
        b.col(k) -= r * b.col(j);
        gram_schmidt();
      }
    }
    if (norms(k) >= (delta - mu(k, k - 1) * mu(k, k - 1)) * norms(k - 1)) {
      if (++k == d) return;
    } else {
      b.col(k).swap(b.col(k - 1));
      gram_schmidt();
      k = std::max(k - 1, 1);
    }
  }
  throw numerical_error("LLL reduction did not terminate");
}

// Canonical presentation: each column's first nonzero coordinate is made
// positive, columns are sorted in descending lexicographic order, and if the
// resulting determinant is negative the last column is negated to restore
// orientation.  Equal lattices produced along different routes then compare
// entrywise equal.
inline void normalize_basis(Mat& b) {
  const int d = static_cast<int>(b.cols());
  for (int j = 0; j < d; ++j) {
    const double scale = b.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < d; ++i) {
      if (std::abs(b(i, j)) > 1e-12 * scale) {
        if (b(i, j) < 0.0) b.col(j) = -b.col(j);
        break;
      }
    }
  }
  std::array<int, kMaxDim> order{};
  for (int j = 0; j < d; ++j) order[j] = j;
  std::sort(order.begin(), order.begin() + d, [&](int a, int c) {
    for (int i = 0; i < d; ++i) {
      if (b(i, a) != b(i, c)) return b(i, a) > b(i, c);
    }
    return false;
  });
  Mat sorted(b.rows(), d);
  for (int j = 0; j < d; ++j) sorted.col(j) = b.col(order[j]);
  if (sorted.determinant() < 0.0) sorted.col(d - 1) = -sorted.col(d - 1);
  b = sorted;
}

// In-place reduction dispatch; no canonical normalization.
inline void reduce_in_place(Mat& b) {
  if (b.cols() == 2) {
    lagrange_reduce(b);
  } else {
    lll_reduce(b);
  }
}

// Reduced and canonically normalized copy.  Rejects numerically singular
// inputs (orthogonality defect beyond kSingularDefect).
inline Mat reduce_basis(const Mat& basis) {
  if (basis.rows() != basis.cols())
    throw validation_error("lattice basis must be square");
  check_dimension(static_cast<int>(basis.rows()));
  if (orthogonality_defect(basis) > kSingularDefect)
    throw numerical_error("numerically singular basis");
  Mat b = basis;
  reduce_in_place(b);
  normalize_basis(b);
  return b;
}

namespace detail {

// Fincke-Pohst sphere enumeration over an upper-triangular R (from QR of the
// basis): visits every nonzero integer vector x with ||R x||^2 <= radius_sq
// whose last nonzero coordinate is positive (one representative per +-
// pair), calling visit(x, norm_sq).  Every (level, candidate) assignment
// counts against the node budget.
template <typename Visit>
void enumerate_upper(const Mat& r, double radius_sq, std::uint64_t budget,
                     Visit&& visit) {
  const int d = static_cast<int>(r.cols());
  std::array<std::int64_t, kMaxDim> x{};
  std::array<double, kMaxDim> partial{};  // partial[i] = sum_{k>i} term_k^2
  std::array<double, kMaxDim> offset{};   // offset[i] = sum_{j>i} R(i,j) x_j
  std::array<std::int64_t, kMaxDim> upper{};
  std::uint64_t nodes = 0;
  int i = d - 1;
  partial[d - 1] = 0.0;
  bool descending = true;
  for (;;) {
    if (descending) {
      offset[i] = 0.0;
      for (int j = i + 1; j < d; ++j) offset[i] += r(i, j) * static_cast<double>(x[j]);
      const double slack = radius_sq * (1.0 + 1e-12) - partial[i];
      if (slack < 0.0) {
        descending = false;
        ++i;
        if (i >= d) return;
        continue;
      }
      const double span = std::sqrt(slack);
      bool higher_zero = true;
      for (int j = i + 1; j < d; ++j) higher_zero = higher_zero && x[j] == 0;
      double lo = (-offset[i] - span) / r(i, i);
      const double hi = (-offset[i] + span) / r(i, i);
      // With all higher coordinates zero, restrict to x_i >= 0 so that only
      // one representative of each +-v pair is visited.
      if (higher_zero && lo < 0.0) lo = 0.0;
      x[i] = static_cast<std::int64_t>(std::ceil(lo - 1e-12));
      upper[i] = static_cast<std::int64_t>(std::floor(hi + 1e-12));
    } else {
      ++x[i];
    }
    if (x[i] > upper[i]) {
      descending = false;
      ++i;
      if (i >= d) return;
      continue;
    }
    if (++nodes > budget) throw numerical_error("enumeration budget exceeded");
    const double term = r(i, i) * static_cast<double>(x[i]) + offset[i];
    const double acc = partial[i] + term * term;
    if (acc > radius_sq * (1.0 + 1e-12)) {
      descending = false;
      continue;
    }
    if (i == 0) {
      bool zero = true;
      for (int j = 0; j < d; ++j) zero = zero && x[j] == 0;
      if (!zero) visit(x, acc);
      descending = false;
    } else {
      partial[i - 1] = acc;
      --i;
      descending = true;
    }
  }
}

// Positive-diagonal R factor of b.
inline Mat qr_factor(const Mat& b) {
  Eigen::HouseholderQR<Mat> qr(b);
  Mat r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (int i = 0; i < r.rows(); ++i) {
    if (r(i, i) < 0.0) r.row(i) = -r.row(i);
    if (!(std::abs(r(i, i)) > 0.0))
      throw numerical_error("numerically singular basis in enumeration");
  }
  return r;
}

}  // namespace detail

// Visits one representative of each +-pair of nonzero lattice vectors v with
// ||v|| <= radius (closed ball), as visit(v, norm_sq).  The basis should be
// reduced; enumeration cost grows with its defect.
template <typename Visit>
void enumerate_ball(const Mat& basis, double radius,
                    std::uint64_t budget, Visit&& visit) {
  if (!(radius >= 0.0)) throw validation_error("enumeration radius must be >= 0");
  const Mat r = detail::qr_factor(basis);
  detail::enumerate_upper(r, radius * radius, budget,
                          [&](const std::array<std::int64_t, kMaxDim>& x, double norm_sq) {
                            Vec v = Vec::Zero(basis.rows());
                            for (int j = 0; j < basis.cols(); ++j)
                              if (x[j] != 0) v += static_cast<double>(x[j]) * basis.col(j);
                            visit(v, norm_sq);
                          });
}

// Exact shortest nonzero vector length of the lattice spanned by a reduced
// basis, via enumeration inside the ball of the best column norm.
inline double shortest_length(const Mat& reduced,
                              std::uint64_t budget = kEnumBudget) {
  const int d = static_cast<int>(reduced.cols());
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < d; ++j) best = std::min(best, reduced.col(j).squaredNorm());
  if (d == 2) return std::sqrt(best);  // Lagrange-reduced col attains lambda_1
  const Mat r = detail::qr_factor(reduced);
  detail::enumerate_upper(r, best, budget,
                          [&](const std::array<std::int64_t, kMaxDim>&, double norm_sq) {
                            if (norm_sq < best) best = norm_sq;
                          });
  return std::sqrt(best);
}

// Point of the space of unimodular lattices: stores the canonical reduced
// basis and the (eagerly computed) shortest vector length.  Immutable, so
// instances are safe to share across threads.
class LatticePoint {
 public:
  template <typename Derived>
  explicit LatticePoint(const Eigen::MatrixBase<Derived>& basis) {
    if (basis.rows() != basis.cols())
      throw validation_error("lattice basis must be square");
    check_dimension(static_cast<int>(basis.rows()));
    basis_ = basis;
    const double det = std::abs(basis_.determinant());
    if (!(std::abs(det - 1.0) <= kDetTolerance))
      throw validation_error("lattice basis must be unimodular (|det| = 1)");
    if (orthogonality_defect(basis_) > kSingularDefect)
      throw numerical_error("numerically singular basis");
    if (std::abs(det - 1.0) > kDetDrift) renormalize_det(basis_);
    reduce_in_place(basis_);
    normalize_basis(basis_);
    lambda1_ = compute_lambda1(basis_);
  }

  static LatticePoint standard(int d) {
    check_dimension(d);
    return LatticePoint(Mat::Identity(d, d));
  }

  int dim() const { return static_cast<int>(basis_.rows()); }
  const Mat& basis() const { return basis_; }
  double shortest_length() const { return lambda1_; }
  double height() const { return 1.0 / lambda1_; }

  bool approx_equal(const LatticePoint& o, double tol) const {
    return dim() == o.dim() &&
           (basis_ - o.basis_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  static double compute_lambda1(const Mat& reduced) {
    return latwalk::shortest_length(reduced);
  }

  Mat basis_;
  double lambda1_ = 0.0;
};

inline LatticePoint apply_group(const GroupElement& g, const LatticePoint& x) {
  if (g.dim() != x.dim())
    throw validation_error("group element and lattice dimension mismatch");
  return LatticePoint(g.matrix() * x.basis());
}

// Successive minima lambda_1 <= ... <= lambda_d, computed by enumerating the
// ball of radius max reduced-column norm (whose columns witness the upper
// bounds) and greedily selecting linearly independent vectors by increasing
// length.  Independence is decided exactly on the integer coefficient
// vectors (fraction-free elimination).
inline Vec successive_minima(const LatticePoint& x,
                             std::uint64_t budget = kEnumBudget) {
  const int d = x.dim();
  const Mat& b = x.basis();
  if (d == 2) {
    Vec out(2);
    out(0) = std::min(b.col(0).norm(), b.col(1).norm());
    out(1) = std::max(b.col(0).norm(), b.col(1).norm());
    return out;
  }
  double radius_sq = 0.0;
  for (int j = 0; j < d; ++j)
    radius_sq = std::max(radius_sq, b.col(j).squaredNorm());

  struct Candidate {
    std::array<std::int64_t, kMaxDim> coeffs;
    double norm_sq;
  };
  std::vector<Candidate> cands;
  const Mat r = detail::qr_factor(b);
  detail::enumerate_upper(r, radius_sq, budget,
                          [&](const std::array<std::int64_t, kMaxDim>& cf, double n2) {
                            cands.push_back({cf, n2});
                          });
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& c) { return a.norm_sq < c.norm_sq; });

  // Fraction-free Gaussian elimination over the integers; rows are the
  // selected coefficient vectors.
  std::vector<std::array<__int128, kMaxDim>> rows;
  auto try_add = [&](const std::array<std::int64_t, kMaxDim>& cf) {
    std::array<__int128, kMaxDim> v{};
    for (int j = 0; j < d; ++j) v[j] = cf[j];
    for (const auto& row : rows) {
      int p = 0;
      while (p < d && row[p] == 0) ++p;
      if (p == d || v[p] == 0) continue;
      const __int128 a = row[p], c = v[p];
      for (int j = 0; j < d; ++j) v[j] = v[j] * a - row[j] * c;
    }
    bool zero = true;
    for (int j = 0; j < d; ++j) zero = zero && v[j] == 0;
    if (zero) return false;
    rows.push_back(v);
    return true;
  };

  Vec out(d);
  int found = 0;
  for (const auto& c : cands) {
    if (try_add(c.coeffs)) {
      out(found++) = std::sqrt(c.norm_sq);
      if (found == d) return out;
    }
  }
  throw numerical_error("successive minima enumeration incomplete");
}

}  // namespace latwalk
