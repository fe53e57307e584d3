#pragma once

#include <stdexcept>
#include <string>

namespace stmrf {

/// Invalid configuration, parameters, or dimensions. CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failure, solver non-convergence, non-finite densities.
/// CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or parse failure. CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stmrf
