#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace revpref {

// Base of every error thrown by the library. Callers that do not care about
// the category can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonPositivePrice : public Error {
 public:
  using Error::Error;
};

class InvalidBundle : public Error {
 public:
  using Error::Error;
};

class ZeroExpenditure : public Error {
 public:
  using Error::Error;
};

class BudgetMismatch : public Error {
 public:
  using Error::Error;
};

class NegativeAllocation : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class EfficiencyOutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class UnknownDomain : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MissingInput : public Error {
 public:
  explicit MissingInput(std::string path)
      : Error("missing input: " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SchemaVersionMismatch : public Error {
 public:
  SchemaVersionMismatch(const std::string& expected, const std::string& found)
      : Error("schema mismatch: expected '" + expected + "', found '" + found +
              "'") {}
};

// Parse failure in a stage file. `line` is 1-based and 0 when the failure is
// structural (the JSON was well formed but a field is wrong); `field` is a
// JSON-pointer-like path such as "observations[3].prices".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::string field)
      : Error(Describe(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string Describe(const std::string& what, std::size_t line,
                              const std::string& field) {
    std::string out = "parse error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in '" + field + "'";
    return out + ": " + what;
  }

  std::size_t line_;
  std::string field_;
};

// Raised by agent endpoints. `status` is the HTTP status (0 for transport
// failures); `retry_after_ms` is set when the server sent a Retry-After hint.
class EndpointError : public Error {
 public:
  EndpointError(const std::string& what, int status, bool retryable,
                long retry_after_ms = -1)
      : Error(what),
        status_(status),
        retryable_(retryable),
        retry_after_ms_(retry_after_ms) {}

  int status() const { return status_; }
  bool retryable() const { return retryable_; }
  long retry_after_ms() const { return retry_after_ms_; }

 private:
  int status_;
  bool retryable_;
  long retry_after_ms_;
};

}  // namespace revpref
