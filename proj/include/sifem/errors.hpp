#pragma once

#include <stdexcept>
#include <string>

namespace sifem {

/// Invalid user input: bad case name, malformed config, out-of-range parameter.
/// Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Geometric construction failed (e.g. disconnected surrogate path).
class GeometryError : public std::runtime_error {
public:
  explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure during assembly or time integration.
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sifem
