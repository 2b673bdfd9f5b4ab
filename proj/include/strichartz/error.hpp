#pragma once

#include <stdexcept>
#include <string>

namespace strichartz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad grid size, exponent, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced or received a non-finite value, or would overflow.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by the gradient engine for foreign handles or singular quotients.
class GradError : public Error {
 public:
  using Error::Error;
};

/// Training diverged and the retry budget was exhausted.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace strichartz
