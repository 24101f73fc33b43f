#include "nlos/error.hpp"

namespace nlos {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::OutOfRange: return "OutOfRange";
    case ErrorCategory::InvalidSnr: return "InvalidSnr";
    case ErrorCategory::DegenerateWindow: return "DegenerateWindow";
    case ErrorCategory::ShapeMismatch: return "ShapeMismatch";
    case ErrorCategory::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCategory::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCategory::DegenerateCrop: return "DegenerateCrop";
    case ErrorCategory::TooSmall: return "TooSmall";
    case ErrorCategory::EmptyMask: return "EmptyMask";
    case ErrorCategory::BadMagic: return "BadMagic";
    case ErrorCategory::TruncatedFile: return "TruncatedFile";
    case ErrorCategory::VersionUnsupported: return "VersionUnsupported";
    case ErrorCategory::IoError: return "IoError";
    case ErrorCategory::SceneParse: return "SceneParse";
    case ErrorCategory::InvalidArgument: return "InvalidArgument";
    case ErrorCategory::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace nlos
