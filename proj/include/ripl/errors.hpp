#pragma once

#include <stdexcept>
#include <string>

namespace ripl {

// Bad parameters or violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An enumeration or net construction would exceed its configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine could not reach its stated tolerance or an invariant
// that should always hold was observed to fail.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear system has no solution (e.g. b outside the range of A).
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File or format problems.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace ripl
