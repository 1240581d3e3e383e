#pragma once

#include <stdexcept>
#include <string>

namespace screenequil {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Grid construction or root bracketing failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Hazard-rate monotonicity needed by a solver does not hold.
class RegularityError : public Error {
 public:
  using Error::Error;
};

// A v0 threshold required by a solver is violated; what() names the inequality.
class CoverageError : public Error {
 public:
  using Error::Error;
};

class UnsupportedAssumption : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : Error("config error at '" + field + "': " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace screenequil
