#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace muxsim {

/// Machine-readable failure class. The CLI maps each category to an exit
/// status and prints its name on stderr.
enum class ErrorCategory {
  InvalidParameter,
  Configuration,
  Parse,
  Undefined,
  NoSolution,
  IllPosed,
  Io,
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

class InvalidParameterError : public Error {
public:
  explicit InvalidParameterError(const std::string& message)
      : Error(ErrorCategory::InvalidParameter, message) {}
};

class ConfigurationError : public Error {
public:
  explicit ConfigurationError(const std::string& message)
      : Error(ErrorCategory::Configuration, message) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& message)
      : Error(ErrorCategory::Parse, message) {}
};

/// A ratio estimator whose denominator vanished (e.g. CAR with no accidentals).
class UndefinedEstimateError : public Error {
public:
  explicit UndefinedEstimateError(const std::string& message)
      : Error(ErrorCategory::Undefined, message) {}
};

class NoSolutionError : public Error {
public:
  explicit NoSolutionError(const std::string& message)
      : Error(ErrorCategory::NoSolution, message) {}
};

class IllPosedError : public Error {
public:
  explicit IllPosedError(const std::string& message)
      : Error(ErrorCategory::IllPosed, message) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& message) : Error(ErrorCategory::Io, message) {}
};

}  // namespace muxsim
