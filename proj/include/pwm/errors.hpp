#pragma once

#include <stdexcept>
#include <string>

namespace pwm {

// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Violated precondition or invariant (non-finite values, non-scalar loss, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or truncated file, unsupported format version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset / checkpoint produced for a different environment or model shape.
class FingerprintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration key or value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training or non-finite planner rewards.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pwm
