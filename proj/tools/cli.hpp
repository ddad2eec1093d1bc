#pragma once

#include <iosfwd>

namespace sparse_consist::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kSolverFailure = 1;
inline constexpr int kInputError = 2;
inline constexpr int kDimensionError = 3;

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sparse_consist::cli
