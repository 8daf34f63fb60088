#pragma once

#include <stdexcept>

namespace pwcrt {

// Invalid input data or model configuration. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration exceeded its horizon without meeting its stop condition.
// The CLI maps this to exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pwcrt
