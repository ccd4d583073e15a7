#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace factuality {

// Shape mismatch inside a tensor primitive or model component.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (e.g. backward on a non-scalar).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite value where a finite one is required.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid user-facing configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data. Carries the 1-based line (or record)
// number when one is known, 0 otherwise.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace factuality
