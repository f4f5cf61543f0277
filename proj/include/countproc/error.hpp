#ifndef COUNTPROC_ERROR_HPP
#define COUNTPROC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace countproc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

/// A parameter or argument precondition failed.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "DomainError"; }
};

/// A series or iterative scheme did not reach its tolerance within budget.
class NonConvergence : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "NonConvergence"; }
};

/// The argument lies outside the range where an alternating series keeps
/// enough significant digits in double precision.
class StabilityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "StabilityError"; }
};

/// The requested method/parameter combination has no implementation.
class Unsupported : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "Unsupported"; }
};

/// A sampler exhausted its step or proposal budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "BudgetExceeded"; }
};

class RejectionBudgetExceeded : public BudgetExceeded {
 public:
  using BudgetExceeded::BudgetExceeded;
  const char* kind() const noexcept override { return "RejectionBudgetExceeded"; }
};

/// An estimator column has zero variance.
class DegenerateColumn : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "DegenerateColumn"; }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace countproc

#endif  // COUNTPROC_ERROR_HPP
