#pragma once

#include <stdexcept>
#include <string>

namespace a2v {

// Malformed input data (CSV rows, vector files). Carries the 1-based line
// number when one is known, 0 otherwise.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string msg, std::size_t line = 0)
      : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numerically degenerate state: NaN/inf parameters, underflowed
// probabilities, diverging optimization.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace a2v
