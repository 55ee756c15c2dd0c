#pragma once

#include <stdexcept>
#include <string>

namespace fgpose {

/// Malformed or unreadable config / params file. Carries the offending line when known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A value is well-formed but violates a documented bound or invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration that cannot be run (e.g. an unobservable measurement set).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite numbers appeared during propagation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A measured direction was too short to normalize.
class DegenerateMeasurement : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fgpose
