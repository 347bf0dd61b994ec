#pragma once

#include <stdexcept>
#include <string>

namespace agrosim {

/// Bad input: configuration, parameter files, user-supplied values.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while a simulation or job is running. The CLI maps this to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agrosim
