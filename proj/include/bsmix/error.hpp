#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bsmix {

// Input outside an operation's mathematical domain (NaN, negative where
// forbidden, index out of range).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised by bs_d_terms when the closed form is singular. bs_call_price
// resolves these cases through analytic limits instead.
class DegenerateInputError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A configuration record violates its invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure raised from inside a ScoreEnvironment, tagged with the step at
// which it happened.
class EnvironmentError : public std::runtime_error {
 public:
  EnvironmentError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace bsmix
