#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace omcn {

// Base of every error the library throws. The CLI maps each subclass to a
// distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Samples fed out of time order.
class OrderingError : public Error {
 public:
  using Error::Error;
};

// A state machine was driven in a way the protocol forbids (e.g. a DCI grant
// observed while the cellular hop is paused).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Index or argument outside the supported domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Inconsistent bookkeeping (e.g. bits accounted over zero time).
class AccountingError : public Error {
 public:
  using Error::Error;
};

// An internal simulation invariant was breached; the run is aborted.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "validation failed:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace omcn
