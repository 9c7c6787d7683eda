#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace lrhmm {

// Caller passed arguments that can never be valid (dimension mismatch,
// empty input, out-of-range option). The CLI maps this to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for failures caused by the data or the model rather than the call.
// The CLI maps every DataError to exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelInvalidError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateStateError : public DataError {
 public:
  DegenerateStateError(std::size_t state, double mass)
      : DataError("state " + std::to_string(state) +
                  " received no posterior mass (total gamma " + format_mass(mass) + ")"),
        state_(state) {}

  std::size_t state() const noexcept { return state_; }

 private:
  static std::string format_mass(double mass) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", mass);
    return buf;
  }

  std::size_t state_;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NothingToForecastError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace lrhmm
