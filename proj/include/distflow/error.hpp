#pragma once

#include <stdexcept>
#include <string>

namespace distflow {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  usage = 2,
  data = 3,
  config = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Malformed trace or graph input (unknown message ids, bad records, ...).
class MalformedTrace : public Error {
 public:
  explicit MalformedTrace(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Message causality that cannot be stamped (a receive waits on itself).
class CausalityError : public Error {
 public:
  explicit CausalityError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

}  // namespace distflow
