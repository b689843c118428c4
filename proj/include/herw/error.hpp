#pragma once

#include <stdexcept>
#include <string>

namespace herw {

// Stable machine-readable failure categories. The CLI maps these to exit codes.
enum class ErrorCategory {
  InvalidInput,
  ParseError,
  ConsistencyError,
  EmptyProblem,
  DegenerateMotion,
  SolverFailure,
  RecoveryFailure,
  Uncertified,
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidInput: return "invalid_input";
    case ErrorCategory::ParseError: return "parse_error";
    case ErrorCategory::ConsistencyError: return "consistency_error";
    case ErrorCategory::EmptyProblem: return "empty_problem";
    case ErrorCategory::DegenerateMotion: return "degenerate_motion";
    case ErrorCategory::SolverFailure: return "solver_failure";
    case ErrorCategory::RecoveryFailure: return "recovery_failure";
    case ErrorCategory::Uncertified: return "uncertified";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(std::string(to_string(category)) + ": " + message),
        category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace herw
