#pragma once

#include <stdexcept>
#include <string>

namespace mixmodal {

// Bad input, bad configuration or a violated precondition. The CLI maps this
// to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Quadrature that does not settle, observations no component can explain,
// enumeration guards and similar failures of the numerics. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mixmodal
