#pragma once

#include <stdexcept>
#include <string>

namespace cohortplat {

// Raised for malformed or invalid scenario input. `field` is the dotted path
// of the offending entry, `constraint` the rule it broke.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, std::string constraint)
      : std::runtime_error(field + ": " + constraint),
        field_(std::move(field)),
        constraint_(std::move(constraint)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string field_;
  std::string constraint_;
};

// Raised when a numerical routine receives arguments outside its domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for failures while running simulations or reading result files.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cohortplat
