#pragma once

#include <stdexcept>
#include <string>

namespace classcount {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number (0 when not tied to a line).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A precondition on an argument was violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A functional is undefined at the given input (zero denominator, missing count).
class UndefinedEstimate : public Error {
 public:
  using Error::Error;
};

/// The moment matrix stopped being positive definite before the requested order.
class LadderEnds : public Error {
 public:
  LadderEnds(int requested, int largest_valid)
      : Error("Hankel ladder ends before k = " + std::to_string(requested) +
              " (largest valid k = " + std::to_string(largest_valid) + ")"),
        requested_(requested),
        largest_valid_(largest_valid) {}

  int requested() const noexcept { return requested_; }
  int largest_valid() const noexcept { return largest_valid_; }

 private:
  int requested_;
  int largest_valid_;
};

/// A numerical routine failed (non-convergence, loss of definiteness).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace classcount
