#pragma once

#include <stdexcept>
#include <string>

namespace tcoupler {

/// Base of every numerical failure raised by the library. The CLI maps these
/// to exit code 2, except ValidationError/ParseError which map to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// |I_cb| >= I_c0: the junction inductance diverges.
class BiasAtOrBeyondCritical : public Error {
 public:
  explicit BiasAtOrBeyondCritical(double i_cb, double i_c0);
  double bias() const { return bias_; }

 private:
  double bias_;
};

class NoStableBranch : public Error {
 public:
  using Error::Error;
};

class TargetNotStable : public Error {
 public:
  using Error::Error;
};

class StepTooCoarse : public Error {
 public:
  using Error::Error;
};

class NoPeak : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class NotReachable : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace tcoupler
