#pragma once

#include <stdexcept>
#include <string>

namespace mgd {

/// Caller broke a documented precondition (mismatched steps, empty input, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Scenario or data file problems. `kind` selects the CLI exit code.
class InputError : public std::runtime_error {
 public:
  enum class Kind { parse, invariant };

  InputError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mgd
