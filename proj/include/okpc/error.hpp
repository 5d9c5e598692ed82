#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace okpc {

/// Short scientific rendering for messages.
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidMesh : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Iterative or dense solver failure: non-convergence, indefiniteness,
/// lost contraction of a series, oversized dense problem.
class SolverError : public Error {
 public:
  enum class Kind { NotConverged, Indefinite, Breakdown, Divergent, TooLarge, Singular };

  SolverError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace okpc
