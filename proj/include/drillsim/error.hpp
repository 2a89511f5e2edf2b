#pragma once

#include <stdexcept>
#include <string>

namespace drillsim {

enum class ErrorCode {
  MissingFile,
  MissingRequiredField,
  DuplicateKey,
  MalformedDocument,
  UnresolvedParent,
  CyclicParent,
  DuplicateObjectName,
  UnknownPlugin,
  InvalidScene,
  DomainError,
  SingularProjection,
  MissingSlice,
  InconsistentSliceSize,
  UnmappedColor,
  UnsupportedEncoding,
  MissingStyle,
  ScopeViolation,
  PluginFailure,
  InputStreamClosed,
  CorruptRecording,
  TruncatedFile,
  BindFailure,
  NoMatchedFrames,
  ResolutionMismatch,
  InvalidArgument,
  Io,
};

const char* to_string(ErrorCode code);

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace drillsim
