#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace weakform {

enum class ErrorCode {
  // set-core
  DuplicateProgram,
  StateOutOfRange,
  IndexOutOfRange,
  NotAStatement,
  VocabularyTooLarge,
  TruthSetTooLarge,
  // task-algebra
  InputsNotStrictSubset,
  EmptyInputs,
  OutputsNotInExtension,
  OutputsNotStrict,
  EmptyOutputs,
  InputNotInTask,
  NoOutput,
  EnvironmentMismatch,
  TaskSpaceTooLarge,
  EmptyTaskSpace,
  // learning
  NoCorrectPolicy,
  AmbiguousMaximum,
  // utility-bounds
  StateSpaceTooLarge,
  InvalidVocabulary,
  EmptyInstantiation,
  NoCandidate,
  // harness
  ParseError,
  UnknownProxy,
  GuardConflict,
  IoError,
  EmptyReport,
  InvariantViolation,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateProgram: return "DuplicateProgram";
    case ErrorCode::StateOutOfRange: return "StateOutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotAStatement: return "NotAStatement";
    case ErrorCode::VocabularyTooLarge: return "VocabularyTooLarge";
    case ErrorCode::TruthSetTooLarge: return "TruthSetTooLarge";
    case ErrorCode::InputsNotStrictSubset: return "InputsNotStrictSubset";
    case ErrorCode::EmptyInputs: return "EmptyInputs";
    case ErrorCode::OutputsNotInExtension: return "OutputsNotInExtension";
    case ErrorCode::OutputsNotStrict: return "OutputsNotStrict";
    case ErrorCode::EmptyOutputs: return "EmptyOutputs";
    case ErrorCode::InputNotInTask: return "InputNotInTask";
    case ErrorCode::NoOutput: return "NoOutput";
    case ErrorCode::EnvironmentMismatch: return "EnvironmentMismatch";
    case ErrorCode::TaskSpaceTooLarge: return "TaskSpaceTooLarge";
    case ErrorCode::EmptyTaskSpace: return "EmptyTaskSpace";
    case ErrorCode::NoCorrectPolicy: return "NoCorrectPolicy";
    case ErrorCode::AmbiguousMaximum: return "AmbiguousMaximum";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::InvalidVocabulary: return "InvalidVocabulary";
    case ErrorCode::EmptyInstantiation: return "EmptyInstantiation";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownProxy: return "UnknownProxy";
    case ErrorCode::GuardConflict: return "GuardConflict";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

/// Guard errors signal that a configured size threshold was exceeded.
inline constexpr bool is_guard_error(ErrorCode code) noexcept {
  return code == ErrorCode::VocabularyTooLarge || code == ErrorCode::TruthSetTooLarge ||
         code == ErrorCode::TaskSpaceTooLarge || code == ErrorCode::StateSpaceTooLarge;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace weakform
