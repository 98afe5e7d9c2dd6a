#pragma once

#include <stdexcept>
#include <string>

namespace spfom {

// Every failure raised by the library derives from Error so callers can catch
// one type; the subclasses map onto the CLI exit-code classes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed an argument outside an operation's contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Invalid parameter or generation range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shapes or dimensions disagree across inputs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Data violates a domain invariant (e.g. an inert customer, an infeasible row).
class DomainError : public Error {
 public:
  using Error::Error;
};

// No feasible point exists for the requested subproblem.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: singular pivots, non-convergence, cache drift.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace spfom
