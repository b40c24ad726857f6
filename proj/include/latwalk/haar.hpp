#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "latwalk/errors.hpp"
#include "latwalk/lattice.hpp"
#include "latwalk/rng.hpp"

namespace latwalk {

inline constexpr int kMaxHaarAttempts = 10'000;

// Haar-distributed unimodular lattices in dimension two, drawn through
// the modular fundamental domain.  Each index gets its own counter
// stream, so samples are reproducible and order-independent.
class HaarSampler2D {
 public:
  struct DomainPoint {
    double x = 0.0;      // real part, |x| <= 1/2
    double y = 0.0;      // imaginary part, x^2 + y^2 >= 1
    double theta = 0.0;  // rotation angle in [0, pi)
  };

  explicit HaarSampler2D(std::uint64_t seed) : seed_(seed) {}

  // Rejection sampling of dx dy / y^2 on the fundamental domain from
  // the strip y >= sqrt(3)/2, with y drawn by inverse CDF.
  DomainPoint domain_sample(std::uint64_t index) const {
    Philox rng(seed_, index);
    const double y_floor = std::sqrt(3.0) / 2.0;
    for (int attempt = 0; attempt < kMaxHaarAttempts; ++attempt) {
      const double y = y_floor / (1.0 - rng.uniform());
      const double x = rng.uniform() - 0.5;
      if (x * x + y * y >= 1.0) {
        DomainPoint p;
        p.x = x;
        p.y = y;
        p.theta = std::numbers::pi * rng.uniform();
        return p;
      }
    }
    throw numerical_error("fundamental domain rejection sampling stalled");
  }

  LatticePoint sample(std::uint64_t index) const {
    const DomainPoint p = domain_sample(index);
    const double root_y = std::sqrt(p.y);
    Mat basis(2, 2);
    basis << 1.0 / root_y, p.x / root_y, 0.0, root_y;
    Mat rotation(2, 2);
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    rotation << c, -s, s, c;
    return LatticePoint(rotation * basis);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace latwalk
