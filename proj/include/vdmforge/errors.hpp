#pragma once

#include <stdexcept>
#include <string>

namespace vdmforge {

// Malformed or inconsistent input data (bad file, index out of range,
// precondition violation). CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite values, solver divergence, unreachable
// optimization target). CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vdmforge
