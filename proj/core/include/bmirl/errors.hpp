#pragma once

#include <stdexcept>
#include <string>

namespace bmirl {

/// Soft value iteration did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A linear solve (occupancy flow equation) failed its residual check.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A training loop detected a non-finite value or a sustained decrease of the
/// log posterior.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// A serialized document does not match its schema. `field()` names the
/// offending key path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace bmirl
