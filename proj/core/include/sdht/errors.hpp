#pragma once

#include <stdexcept>
#include <string>

namespace sdht {

// Base class for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched alphabet sizes or vector dimensions.
class dimension_error : public error {
 public:
  using error::error;
};

// An exact computation would exceed the configured enumeration budget.
class budget_error : public error {
 public:
  using error::error;
};

// An operation precondition was violated (degenerate inputs, bad ordering,
// out-of-range parameters).
class precondition_error : public error {
 public:
  using error::error;
};

// The requested object cannot be constructed from the given inputs
// (e.g. a separating channel for a collinear triple).
class construction_error : public error {
 public:
  using error::error;
};

// A certified numerical bound was violated at run time.
class audit_error : public error {
 public:
  using error::error;
};

}  // namespace sdht
