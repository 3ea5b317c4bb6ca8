#pragma once

#include <stdexcept>
#include <string>

namespace impact {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A book update that cannot be mapped onto one of the six event types.
class ClassificationError : public Error {
 public:
  using Error::Error;
};

/// A required statistic is absent (zero-probability type, no realized gap).
class MissingInput : public Error {
 public:
  using Error::Error;
};

/// Inputs estimated on incompatible lag grids, or a grid too long for the data.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Linear system whose condition estimate exceeds the configured threshold.
class IllConditioned : public Error {
 public:
  IllConditioned(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  [[nodiscard]] double condition() const { return condition_; }

 private:
  double condition_;
};

}  // namespace impact
