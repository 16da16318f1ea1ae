#pragma once

#include <stdexcept>
#include <string>

namespace atmq {

/// Bad user-supplied parameters or an inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Reading or writing run artifacts failed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation left its validity domain (non-convergence, degenerate
/// moments, power loss beyond the boundary-mask budget, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace atmq
