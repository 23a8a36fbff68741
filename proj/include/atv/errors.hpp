#pragma once

#include <stdexcept>
#include <string>

namespace atv {

/// Base class for everything the library throws.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An input violates a documented precondition (shape mismatch, out-of-box
/// values, invalid parameters).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// Numerical breakdown: non-finite iterates, empty evaluation sets.
class NumericalError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace atv
