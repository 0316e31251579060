#pragma once

#include <stdexcept>
#include <string>

namespace bfstab {

/// Argument outside the mathematical domain of an operation (p not in (0,1), s <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent input data (weights, covariances, files).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method failed to converge or produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested quantity needs information the object does not carry (e.g. no derivative).
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnderflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Budget exhausted before the accuracy target; carries the best estimate so far.
class AccuracyError : public NumericalError {
 public:
  AccuracyError(const std::string& what, double partial, double error)
      : NumericalError(what), partial_(partial), error_(error) {}

  double partial() const noexcept { return partial_; }
  double error() const noexcept { return error_; }

 private:
  double partial_;
  double error_;
};

/// A mathematical invariant was violated by evaluated data (e.g. T' <= 0).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bfstab
