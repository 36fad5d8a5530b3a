#pragma once

#include <stdexcept>
#include <string>

namespace bdns {

/// Argument outside the mathematical domain of a function (e.g. negative density).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent argument (shape mismatch, empty sample grid, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A viscosity law that cannot support the requested quantity.
class LawError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time integration that had to stop (non-finite field, dt underflow).
class SolverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial data failing one of the finiteness hypotheses of a stability study.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bdns
