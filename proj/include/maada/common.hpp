#ifndef MAADA_COMMON_HPP
#define MAADA_COMMON_HPP

#include <stdexcept>
#include <string>

namespace maada {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between operands or between a bound value and its slot.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (bad sizes, negative steps, unknown fields).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid data (labels out of range, missing labels).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Non-finite value produced while evaluating a tape or oracle function.
// Carries the offending tape node when one is known.
class EvalError : public Error {
 public:
  using Error::Error;
  EvalError(const std::string& msg, long node) : Error(msg), node_(node) {}
  long node() const { return node_; }

 private:
  long node_ = -1;
};

// Non-finite loss term during training; message names the term.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Operation invoked outside its contract (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace maada

#endif
