#pragma once

#include <stdexcept>
#include <string>

namespace sparse_consist {

// Vector or matrix sizes that do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed data or violated preconditions on an input (bad file, observation
// outside the clipping range, unrepresentable quantizer level, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure that prevents a solver from running at all.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_same_size(long expected, long actual, const char* what) {
  if (expected != actual) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(actual));
  }
}

}  // namespace sparse_consist
