#pragma once

#include <stdexcept>
#include <string>

namespace ensel {

enum class ErrorKind {
  validation,       // malformed input or violated precondition
  infeasible,       // no affordable model under the budget
  size_guard,       // instance too large for exhaustive evaluation
  budget_exceeded,  // actual spend would cross the per-query budget
  backend,          // model backend could not answer
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 2 validation, 3 infeasible, 4 size guard.
[[nodiscard]] constexpr int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::backend:
      return 2;
    case ErrorKind::infeasible:
    case ErrorKind::budget_exceeded:
      return 3;
    case ErrorKind::size_guard:
      return 4;
  }
  return 1;
}

}  // namespace ensel
