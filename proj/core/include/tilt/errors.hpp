#pragma once

#include <stdexcept>
#include <string>

namespace tilt {

// Argument outside the admissible region of a function (theta outside the
// tilting domain, threshold outside the range of psi').
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller violated a documented precondition (invalid parameters, an event
// that is not rare in the required direction, too few samples).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure did not reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tilt
