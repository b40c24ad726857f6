#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "latwalk/group.hpp"
#include "latwalk/rng.hpp"

namespace latwalk {

// Weights must sum to 1 within this tolerance.
inline constexpr double kWeightTolerance = 1e-12;
// Atoms closer than this (entrywise) are considered duplicates.
inline constexpr double kAtomMergeTolerance = 1e-12;
// Caps for explicit convolution powers.
inline constexpr int kMaxConvolutionPower = 8;
inline constexpr std::size_t kMaxConvolutionAtoms = 1'000'000;

// Finitely supported probability measure on SL_d(R).
class StepMeasure {
 public:
  StepMeasure(std::vector<GroupElement> atoms, std::vector<double> weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.empty()) throw validation_error("step measure needs at least one atom");
    if (atoms_.size() != weights_.size())
      throw validation_error("step measure atom/weight count mismatch");
    const int d = atoms_.front().dim();
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i].dim() != d)
        throw validation_error("step measure atoms must share one dimension");
      if (!(weights_[i] > 0.0))
        throw validation_error("step measure weights must be positive");
      total += weights_[i];
    }
    if (std::abs(total - 1.0) > kWeightTolerance)
      throw validation_error("step measure weights must sum to 1");
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      for (std::size_t j = i + 1; j < atoms_.size(); ++j)
        if (atoms_[i].approx_equal(atoms_[j], kAtomMergeTolerance))
          throw validation_error("step measure atoms must be pairwise distinct");
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }

  int dim() const { return atoms_.front().dim(); }
  std::size_t size() const { return atoms_.size(); }
  const GroupElement& atom(std::size_t i) const { return atoms_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  // Inverse-CDF draw; one uniform per step.
  int sample_index(Philox& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return static_cast<int>(std::min(idx, atoms_.size() - 1));
  }

  // Convolution a * b: the law of g_a g_b with independent draws.  Duplicate
  // products are merged by weight.
  friend StepMeasure convolve(const StepMeasure& a, const StepMeasure& b) {
    if (a.dim() != b.dim())
      throw validation_error("convolution dimension mismatch");
    if (a.size() * b.size() > kMaxConvolutionAtoms)
      throw validation_error("convolution support exceeds the atom cap");
    struct Product {
      Mat m;
      double w;
    };
    std::vector<Product> products;
    products.reserve(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        products.push_back({a.atoms_[i].matrix() * b.atoms_[j].matrix(),
                            a.weights_[i] * b.weights_[j]});
    // Sort entrywise so duplicates become neighbors, then merge within
    // tolerance.
    const int d = a.dim();
    std::sort(products.begin(), products.end(), [d](const Product& p, const Product& q) {
      for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r)
          if (p.m(r, c) != q.m(r, c)) return p.m(r, c) < q.m(r, c);
      return false;
    });
    std::vector<GroupElement> atoms;
    std::vector<double> weights;
    for (const auto& p : products) {
      if (!atoms.empty() &&
          (atoms.back().matrix() - p.m).cwiseAbs().maxCoeff() <= kAtomMergeTolerance) {
        weights.back() += p.w;
      } else {
        atoms.emplace_back(p.m);
        weights.push_back(p.w);
      }
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    return StepMeasure(std::move(atoms), std::move(weights));
  }

  // Explicit n-fold convolution power; only small powers are materialized.
  StepMeasure power(int n) const {
    if (n < 1 || n > kMaxConvolutionPower)
      throw validation_error("convolution power must be in [1, 8]");
    StepMeasure acc = *this;
    for (int k = 1; k < n; ++k) acc = convolve(acc, *this);
    return acc;
  }

 private:
  std::vector<GroupElement> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

}  // namespace latwalk
