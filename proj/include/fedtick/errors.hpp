#pragma once

#include <stdexcept>
#include <string>

namespace fedtick {

// Caller broke a documented precondition (dimension mismatch, empty batch, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Bad user-facing configuration (file contents, divisibility, presets).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Operation not defined for the given federation/model kind.
class UnsupportedOperation : public std::runtime_error {
 public:
  explicit UnsupportedOperation(const std::string& what) : std::runtime_error(what) {}
};

// An analytical premise (e.g. a stepsize cap) does not hold for the inputs.
class PremiseViolation : public std::domain_error {
 public:
  explicit PremiseViolation(const std::string& what) : std::domain_error(what) {}
};

// Formula evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace fedtick
