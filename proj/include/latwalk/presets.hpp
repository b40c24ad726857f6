#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "latwalk/errors.hpp"
#include "latwalk/group.hpp"
#include "latwalk/rational.hpp"
#include "latwalk/step_measure.hpp"

namespace latwalk {

// A named walk family: the step measure plus the exact rational weights
// (needed by the finite-quotient experiments, which work in exact
// arithmetic) and a default congruence modulus.
struct Preset {
  std::string name;
  std::string description;
  StepMeasure measure;
  std::vector<Rational> rational_weights;
  int default_modulus = 2;
};

namespace detail {

inline Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

// Block-diagonal 4x4 from two 2x2 blocks.
inline Mat block_diag(const Mat& top, const Mat& bottom) {
  Mat m = Mat::Zero(4, 4);
  m.block(0, 0, 2, 2) = top;
  m.block(2, 2, 2, 2) = bottom;
  return m;
}

inline Mat shear_upper() { return mat2(1.0, 1.0, 0.0, 1.0); }
inline Mat shear_lower() { return mat2(1.0, 0.0, 1.0, 1.0); }

// The integer shears conjugated by diag(2^(1/4), 2^(-1/4)): the upper
// shear entry becomes sqrt(2), the lower one 1/sqrt(2).  The conjugated
// pair generates a group with irrational matrix entries, so its orbit on
// the integer lattice is not contained in any congruence fiber.
inline Mat conjugated_upper() { return mat2(1.0, std::sqrt(2.0), 0.0, 1.0); }
inline Mat conjugated_lower() { return mat2(1.0, 0.0, 1.0 / std::sqrt(2.0), 1.0); }

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"example-2.1", "example-2.2-product", "simmons-weiss", "conjugated-sl2"};
}

// Builds one of the named walk families.  The ids are stable interface
// strings used by configs and the command line.
inline Preset make_preset(const std::string& name) {
  using detail::block_diag;
  using detail::mat2;
  const Rational half(1, 2);
  const Rational quarter(1, 4);
  if (name == "example-2.1") {
    std::vector<GroupElement> atoms{GroupElement(detail::shear_upper()),
                                    GroupElement(detail::shear_lower())};
    return Preset{name,
                  "integer shear pair on the space of plane lattices, p = 1/2 each",
                  StepMeasure(std::move(atoms), {0.5, 0.5}),
                  {half, half},
                  2};
  }
  if (name == "conjugated-sl2") {
    std::vector<GroupElement> atoms{GroupElement(detail::conjugated_upper()),
                                    GroupElement(detail::conjugated_lower())};
    return Preset{name,
                  "irrationally conjugated shear pair on the space of plane "
                  "lattices, p = 1/2 each",
                  StepMeasure(std::move(atoms), {0.5, 0.5}),
                  {half, half},
                  2};
  }
  if (name == "example-2.2-product") {
    // Rank-two product family: the first block steps with an integer
    // shear while the second block independently applies either the
    // conjugated copy of the same shear or nothing.
    std::vector<GroupElement> atoms{
        GroupElement(block_diag(detail::shear_upper(), detail::conjugated_upper())),
        GroupElement(block_diag(detail::shear_upper(), Mat::Identity(2, 2))),
        GroupElement(block_diag(detail::shear_lower(), detail::conjugated_lower())),
        GroupElement(block_diag(detail::shear_lower(), Mat::Identity(2, 2)))};
    return Preset{name,
                  "block product: integer shear paired with its conjugated copy "
                  "or the identity, p = 1/4 each",
                  StepMeasure(std::move(atoms), {0.25, 0.25, 0.25, 0.25}),
                  {quarter, quarter, quarter, quarter},
                  2};
  }
  if (name == "simmons-weiss") {
    std::vector<GroupElement> atoms{GroupElement(mat2(2.0, 0.0, 0.0, 0.5)),
                                    GroupElement(mat2(2.0, 1.0, 0.0, 0.5))};
    return Preset{name,
                  "expanding diagonal pair with unit determinant, p = 1/2 each",
                  StepMeasure(std::move(atoms), {half.get_d(), half.get_d()}),
                  {half, half},
                  2};
  }
  throw validation_error("unknown preset: " + name);
}

}  // namespace latwalk
