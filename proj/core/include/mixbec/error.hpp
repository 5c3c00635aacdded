#pragma once

#include <stdexcept>
#include <string>

namespace mixbec {

// Raised when an integrator or solver produces non-finite values or fails to
// converge within its budget.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the zero-energy scattering solver (bound-state regime, missing
// bracket during calibration).
class ScatteringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a configuration document fails validation. `key()` carries the
// offending `section.key` path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace mixbec
