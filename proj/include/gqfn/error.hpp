#pragma once

#include <stdexcept>
#include <string>

namespace gqfn {

/// Precondition violated by an API call (bad index, shape mismatch, parameter out of range).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// User input (spec file, expression, noise data) failed validation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical run could not hold its tolerances: trace drift, positivity loss,
/// truncation leak, step-size stability.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gqfn
