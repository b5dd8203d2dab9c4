#include "muxsim/error.hpp"

namespace muxsim {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::InvalidParameter:
      return "invalid_parameter";
    case ErrorCategory::Configuration:
      return "configuration";
    case ErrorCategory::Parse:
      return "parse";
    case ErrorCategory::Undefined:
      return "undefined";
    case ErrorCategory::NoSolution:
      return "no_solution";
    case ErrorCategory::IllPosed:
      return "ill_posed";
    case ErrorCategory::Io:
      return "io";
  }
  return "unknown";
}

}  // namespace muxsim
