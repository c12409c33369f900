#pragma once

#include <stdexcept>
#include <string>

namespace scmmsb {

// Invalid configuration or usage (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data that falls outside the declared node/step dimensions. A DataError at
// the library level, but the CLI reports it as a configuration problem
// (exit code 2) since the declared dimensions come from the config.
class DimensionError : public DataError {
 public:
  explicit DimensionError(const std::string& msg) : DataError(msg) {}
};

// Numerical failure during computation (CLI exit code 4).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scmmsb
