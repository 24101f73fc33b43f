#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlos {

enum class ErrorCategory {
  OutOfRange,
  InvalidSnr,
  DegenerateWindow,
  ShapeMismatch,
  NonPositiveDepth,
  NonFiniteLoss,
  DegenerateCrop,
  TooSmall,
  EmptyMask,
  BadMagic,
  TruncatedFile,
  VersionUnsupported,
  IoError,
  SceneParse,
  InvalidArgument,
  UsageError,
};

std::string_view category_name(ErrorCategory c);

/// Every domain failure in the library is reported as an Error carrying a
/// machine-readable category; the CLI prints "<Category>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& message) {
  throw Error(c, message);
}

}  // namespace nlos
