#pragma once

#include <stdexcept>
#include <string>

namespace stmix {

// Arguments outside an operation's domain (non-finite location, zero scale, ...).
struct invalid_parameter_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input data violates a format or model invariant; message carries the location.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical routine cannot proceed (Cholesky failure, bracket failure,
// degenerate sampling weights).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct configuration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stmix
