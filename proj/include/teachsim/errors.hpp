#pragma once

#include <stdexcept>
#include <string>

namespace teachsim {

// Base of every library failure. `code()` is a short stable tag the CLI prints
// as a greppable prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("E_DIM", what) {}
};

// Singular maps, rank-deficient query sets, saturated feedback, failed fits.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("E_NUMERIC", what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("E_ARG", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("E_CONFIG", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("E_IO", what) {}
};

// Malformed tabular input; carries the 1-based line and column name.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line, std::string column)
      : Error("E_PARSE", what), line_(line), column_(std::move(column)) {}
  long line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  long line_;
  std::string column_;
};

// Raised by synthesis selection when v already equals v*: nothing left to teach.
class TeachingComplete : public Error {
 public:
  TeachingComplete() : Error("E_DONE", "virtual learner already at the optimum") {}
};

}  // namespace teachsim
