#pragma once

#include <stdexcept>
#include <string>

namespace bayespec {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  Success = 0,
  Failure = 1,
  Config = 2,
  Data = 3,
  Numeric = 4,
  Io = 5,
};

/// Base class for errors that map onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::Config, what) {}
};

/// Input data that cannot be used (non-integer counts, duplicate energies...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};

/// A computation produced non-finite values or could not be started.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::Numeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::Io, what) {}
};

}  // namespace bayespec
