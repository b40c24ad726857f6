#pragma once

#include <stdexcept>

namespace latwalk {

// Malformed or out-of-contract input: bad config values, invalid measures,
// dimension mismatches.  The CLI maps this to exit code 2.
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation that cannot be completed reliably: enumeration budget
// exhausted, numerically singular basis, exhausted rejection sampling.
// The CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace latwalk
