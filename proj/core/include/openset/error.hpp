#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace openset {

enum class ErrorCode {
  ZeroNorm,
  NonFinite,
  DimensionMismatch,
  KTooLarge,
  ParseError,
  DuplicateMediaId,
  DuplicateProbeId,
  DuplicateSubject,
  UnknownTruthSubject,
  TargetUnachievable,
  InsufficientSubjects,
  DegenerateSample,
  DegenerateVariance,
  DomainError,
  ZeroSigma,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; callers branch on
// code() rather than on the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace openset
