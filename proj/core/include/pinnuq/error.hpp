#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinnuq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (dimensions, ranges, sizes).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed computation graph, e.g. an operand id not yet on the tape.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A loss, log density or trajectory became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, double value, const std::string& what)
      : Error(what + " (iteration " + std::to_string(iteration) + ", value " + std::to_string(value) + ")"),
        iteration_(iteration),
        value_(value) {}
  std::size_t iteration() const noexcept { return iteration_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t iteration_;
  double value_;
};

class SamplerError : public Error {
 public:
  using Error::Error;
};

/// A deep-ensemble member failed; wraps the member's own error message.
class EnsembleError : public Error {
 public:
  EnsembleError(std::size_t member, const std::string& what)
      : Error("ensemble member " + std::to_string(member) + ": " + what), member_(member) {}
  std::size_t member() const noexcept { return member_; }

 private:
  std::size_t member_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pinnuq
