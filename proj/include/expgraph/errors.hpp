#pragma once

#include <stdexcept>

namespace expgraph {

// Matrix/vector shapes disagree with an operation's contract.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A scalar parameter lies outside its documented range.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed external input (CSV stream, config file, scenario dump).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical routine cannot proceed (failed factorization, non-finite values).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace expgraph
