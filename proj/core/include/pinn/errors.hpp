#pragma once

#include <stdexcept>
#include <string>

namespace pinn {

/// Caller violated a precondition (bad dimensions, bad ids, bad config values).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string op, const std::string& what)
      : std::runtime_error(what), op_(std::move(op)) {}

  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// Parameters loaded for warm start do not fit the requested network.
class ArchitectureMismatch : public UsageError {
 public:
  using UsageError::UsageError;
};

}  // namespace pinn
