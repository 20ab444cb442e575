#pragma once

#include <stdexcept>
#include <string>

namespace hosdp {

// Shape or axis mismatch between operands.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (probabilities, lambda, dims, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an API precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operation invoked in a state that does not allow it, e.g. parsing with an
// untrained model. Reported as a usage error by the command line tool.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Two corpora that should describe the same sentences do not.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation produced NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus or model file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SerializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hosdp
