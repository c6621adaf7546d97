#include "dspl/error.hpp"

namespace dspl {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::UnboundComparison: return "UnboundComparison";
    case ErrorCode::NonStratifiedNegation: return "NonStratifiedNegation";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotDiscrete: return "NotDiscrete";
    case ErrorCode::NotSupported: return "NotSupported";
    case ErrorCode::SizeExceeded: return "SizeExceeded";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::MixedAtomUnsupported: return "MixedAtomUnsupported";
    case ErrorCode::NumericError: return "NumericError";
    case ErrorCode::InconsistentEncoding: return "InconsistentEncoding";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownParam: return "UnknownParam";
    case ErrorCode::NotFinite: return "NotFinite";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message, SourcePos pos) {
  std::string out(error_code_name(code));
  if (pos.line > 0) {
    out += " at " + std::to_string(pos.line) + ":" + std::to_string(pos.column);
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, SourcePos pos)
    : std::runtime_error(format_message(code, message, pos)),
      code_(code),
      detail_(message),
      pos_(pos) {}

void fail(ErrorCode code, const std::string& message, SourcePos pos) {
  throw Error(code, message, pos);
}

}  // namespace dspl
