#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dspl {

enum class ErrorCode {
  SyntaxError,
  ValidationError,
  DepthExceeded,
  UnboundComparison,
  NonStratifiedNegation,
  UnknownFunction,
  DomainError,
  NotDiscrete,
  NotSupported,
  SizeExceeded,
  TooLarge,
  MixedAtomUnsupported,
  NumericError,
  InconsistentEncoding,
  ShapeMismatch,
  UnknownParam,
  NotFinite,
  NonConvergent,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

// Source position, 1-based. line == 0 means "no position".
struct SourcePos {
  int line = 0;
  int column = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, SourcePos pos = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  SourcePos pos() const noexcept { return pos_; }

 private:
  ErrorCode code_;
  std::string detail_;
  SourcePos pos_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message, SourcePos pos = {});

}  // namespace dspl
