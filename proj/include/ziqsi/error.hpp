#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ziqsi {

// Bad input: wrong dimensions, out-of-domain levels, unknown columns.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw UsageError(message);
}

inline void require_level(double tau, const char* name = "tau") {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw UsageError(std::string(name) + " must lie in (0, 1), got " + std::to_string(tau));
  }
}

}  // namespace ziqsi
