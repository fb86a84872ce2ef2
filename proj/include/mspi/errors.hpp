#pragma once

#include <stdexcept>
#include <string>

namespace mspi {

// Mismatched matrix/vector shapes or malformed inputs.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A policy whose closed-loop moment operator has spectral radius >= 1.
class NotStabilizingError : public std::runtime_error {
 public:
  NotStabilizingError() : std::runtime_error("policy not mean-square stabilizing") {}
  using std::runtime_error::runtime_error;
};

// Linear solve or rank-1 update that is numerically singular.
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Theta_uu is not positive definite, so no minimizing gain exists.
class ImprovementError : public std::runtime_error {
 public:
  ImprovementError() : std::runtime_error("improvement undefined") {}
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mspi
