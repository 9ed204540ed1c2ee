#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rollball {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A configuration file could not be parsed. `line()` is 1-based, 0 if unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line) : ValidationError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A mathematical operation is undefined for its argument (e.g. inverse of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The rolling-ball mass matrix became numerically singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Failures raised by the time integrators. `time()` is the last good time.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

/// Step size fell below h_min (typically stiffness or a singularity).
class StiffnessError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

/// NaN or Inf appeared in the right-hand side.
class DivergenceError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

/// max_steps exhausted before reaching the final time.
class BudgetError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

/// Newton iteration of an implicit step did not converge.
class ImplicitStepError : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

}  // namespace rollball
