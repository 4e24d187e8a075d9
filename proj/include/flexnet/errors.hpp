#pragma once

#include <stdexcept>
#include <string>

namespace flexnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input or a violated model invariant.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine was called outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A problem size exceeds a configured cap (subset enumeration, state space).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs an ergodic model received one that is not.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexnet
