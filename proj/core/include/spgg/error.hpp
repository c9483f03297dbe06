#pragma once

#include <stdexcept>
#include <string>

namespace spgg {

/// Rejected configuration or argument (bad lattice size, eta < 2, unknown key, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs that violate an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values reaching the optimizer or the network.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal invariant broken; indicates a bug rather than bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InsufficientReplicates : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace spgg
