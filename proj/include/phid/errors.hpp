#pragma once

#include <stdexcept>
#include <string>

namespace phid {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or dimension mismatch in tensor/graph operations.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Autodiff contract violations (non-scalar root, NaN in forward values, ...).
class AutodiffError : public Error {
 public:
  explicit AutodiffError(const std::string& msg) : Error(msg) {}
};

/// A numerical integration or rollout blew up.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

/// Invalid experiment configuration supplied by the user.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Corrupt, truncated or wrong-version container files.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace phid
