#pragma once
#include <stdexcept>
#include <string>

namespace lobfluid {

// Base of everything the library throws on a contract violation or a
// numerical failure. Callers that only need "did it work" catch this.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ParamErrorCode { NonPositiveRate, NegativeBeta, BadN, BadPriceLabels, BadArgument };

// Invalid model parameters or invalid arguments to an operation.
class ParamError : public Error {
public:
  ParamError(ParamErrorCode code, std::string field, const std::string& what)
      : Error(field + ": " + what), code_(code), field_(std::move(field)) {}

  ParamErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

private:
  ParamErrorCode code_;
  std::string field_;
};

// Applying an event that would drive an occupancy negative.
class DisabledEvent : public Error {
public:
  using Error::Error;
};

// Simulation hit its event-count safety cap.
class BudgetExceeded : public Error {
public:
  using Error::Error;
};

// Numerical solver failures. Each subtype is distinct so the CLI and tests
// can tell them apart; all map to the same "solver" exit code.
class SolverError : public Error {
public:
  using Error::Error;
};

class StepUnderflow : public SolverError {
public:
  using SolverError::SolverError;
};

class NegativeState : public SolverError {
public:
  using SolverError::SolverError;
};

class HypothesisViolated : public SolverError {
public:
  using SolverError::SolverError;
};

class BracketFailure : public SolverError {
public:
  using SolverError::SolverError;
};

class NoConvergence : public SolverError {
public:
  using SolverError::SolverError;
};

class NonMonotoneInput : public SolverError {
public:
  using SolverError::SolverError;
};

class OnKink : public SolverError {
public:
  using SolverError::SolverError;
};

} // namespace lobfluid
