#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polymer {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its mathematical domain (e.g. H not in (1/2,1)).
struct DomainError : Error {
  using Error::Error;
};

/// Caller passed inconsistent arguments (dimension mismatch, window too small).
struct ArgumentError : Error {
  using Error::Error;
};

/// Evaluation at a point where the function is singular.
struct SingularityError : Error {
  using Error::Error;
};

/// Loss of positive definiteness, quadrature failure and similar.
struct NumericalError : Error {
  using Error::Error;
};

struct ResourceError : Error {
  ResourceError(const std::string& what, std::size_t bytes)
      : Error(what), required_bytes(bytes) {}
  std::size_t required_bytes;
};

struct ConfigError : Error {
  ConfigError(const std::string& what, int line_, int column_)
      : Error(what), line(line_), column(column_) {}
  int line;
  int column;
};

}  // namespace polymer
