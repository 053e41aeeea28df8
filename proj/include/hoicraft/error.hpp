#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hoicraft {

enum class ErrorCode {
  InvalidArgument,
  InvalidScene,
  UnknownPart,
  EmptyScript,
  NoManipulation,
  IncompleteMatrix,
  DegenerateInput,
  TooFewPairs,
  MissingField,
  ParseError,
  SchemaError,
  LLMUnavailable,
  LLMError,
  NotFound,
  EmptyIntent,
  CountOutOfRange,
  NotSelected,
  InvalidParam,
  WorkflowViolation,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above. The
// optional detail holds context that is useful for logs but not for users
// (raw LLM output, offending field names).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace hoicraft
