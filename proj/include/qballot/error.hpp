#pragma once

#include <stdexcept>
#include <string>

namespace qballot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A dense expansion or a fused factor would exceed the configured amplitude budget.
class BudgetError : public Error {
  public:
    using Error::Error;
};

/// A protocol-level invariant failed while the simulation was running.
class InvariantError : public Error {
  public:
    using Error::Error;
};

}  // namespace qballot
