#pragma once

#include <stdexcept>
#include <string>

namespace statact {

// Error taxonomy mirrored by the CLI exit codes:
//   1 = validation / solver / experiment-assertion failure
//   2 = budget, resolution, or unsupported-word error
//   3 = malformed input (files, words, flags)

struct MalformedInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedWordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}
