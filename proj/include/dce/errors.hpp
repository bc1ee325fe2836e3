#pragma once

#include <stdexcept>
#include <string>

namespace dce {

// Bad input: parameter out of its valid range. CLI exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not defined for the requested regime (e.g. revivals for x <= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Numerical failure. CLI exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Population reached the truncation edge of a Fock space or waveguide array.
class TruncationError : public NumericalError {
 public:
  TruncationError(const std::string& what, double leakage)
      : NumericalError(what), leakage_(leakage) {}
  double leakage() const noexcept { return leakage_; }

 private:
  double leakage_;
};

class IntegratorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A tolerance-monitored invariant (norm, positivity) drifted too far.
class ToleranceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A search exceeded its hard size cap.
class ResourceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dce
