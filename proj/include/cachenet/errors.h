#pragma once

#include <stdexcept>

namespace cachenet {

// Raised for invalid inputs and configurations (bad parameters, malformed
// files, infeasible budgets).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a runtime check on a documented invariant fails.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cachenet
