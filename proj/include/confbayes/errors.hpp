#pragma once

#include <stdexcept>
#include <string>

namespace confbayes {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed data, out-of-range arguments, violated preconditions.
// The CLI maps these to exit code 2.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class IndexError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class EmptyCalibration : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Parameter outside its space (e.g. a Binomial success probability of 1.3).
class DomainError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class InsufficientData : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Numeric or model failure on otherwise valid input. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class UndefinedMoment : public NumericError {
 public:
  using NumericError::NumericError;
};

class SamplerDiagnosticError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Every importance weight is zero (all log-weights are -inf).
class DegenerateWeights : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularReflection : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace confbayes
