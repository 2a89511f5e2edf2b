#include "drillsim/error.hpp"

namespace drillsim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MissingRequiredField: return "MissingRequiredField";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::UnresolvedParent: return "UnresolvedParent";
    case ErrorCode::CyclicParent: return "CyclicParent";
    case ErrorCode::DuplicateObjectName: return "DuplicateObjectName";
    case ErrorCode::UnknownPlugin: return "UnknownPlugin";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularProjection: return "SingularProjection";
    case ErrorCode::MissingSlice: return "MissingSlice";
    case ErrorCode::InconsistentSliceSize: return "InconsistentSliceSize";
    case ErrorCode::UnmappedColor: return "UnmappedColor";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::MissingStyle: return "MissingStyle";
    case ErrorCode::ScopeViolation: return "ScopeViolation";
    case ErrorCode::PluginFailure: return "PluginFailure";
    case ErrorCode::InputStreamClosed: return "InputStreamClosed";
    case ErrorCode::CorruptRecording: return "CorruptRecording";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::NoMatchedFrames: return "NoMatchedFrames";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace drillsim
