#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pairforge {

enum class ErrorKind {
  ZeroVector,
  DimensionMismatch,
  EmptyConceptSet,
  LambdaOutOfRange,
  UnknownPrompt,
  MixedPromptGroup,
  DegeneratePair,
  InvalidCone,
  InvalidPolicy,
  EmptyPairSet,
  NotSingleOccurrence,
  InsufficientCaptions,
  InvalidLlmPrompt,
  InsufficientPrompts,
  UnknownConcept,
  NonFiniteInput,
  UnknownOutcome,
  PromptGroupSizeMismatch,
  EmptyInput,
  InvalidArgument,
  ParseError,
  IoError,
  InvalidConfig,
  GeneratorFailure,
  EmbedderFailure,
  TrainerFailure,
  EmptySelection,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind; the CLI
// maps kinds to exit codes and prints them as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace pairforge
