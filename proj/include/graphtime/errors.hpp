#pragma once

#include <stdexcept>
#include <string>

namespace graphtime {

// Invalid inputs: bad dimensions, violated invariants, malformed configs.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failures of the numerics themselves: non-PD factorizations, singular
// systems, non-finite intermediates.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace graphtime
