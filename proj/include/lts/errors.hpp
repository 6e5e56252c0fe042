#pragma once

#include <stdexcept>
#include <string>

namespace lts {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or configuration, detected before any work is done.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed corpus content. `line()` is 1-based, 0 when not line-specific.
class DatasetError : public ValidationError {
 public:
  DatasetError(const std::string& what, std::size_t line = 0)
      : ValidationError(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class LabelParseError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or weight.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace lts
