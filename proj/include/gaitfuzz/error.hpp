#pragma once

#include <stdexcept>
#include <string>

namespace gaitfuzz {

/// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value, missing input, or an out-of-contract argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A controller, binding or anchor set that violates its invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No rule fired for some input point.
class RuleGapError : public Error {
 public:
  using Error::Error;
};

/// Coincident points where a direction is required.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Target farther away than the leg can stretch.
class ReachError : public Error {
 public:
  ReachError(const std::string& what, double shortfall) : Error(what), shortfall_(shortfall) {}
  double shortfall() const noexcept { return shortfall_; }

 private:
  double shortfall_;
};

class EmptyCycleError : public Error {
 public:
  using Error::Error;
};

}  // namespace gaitfuzz
