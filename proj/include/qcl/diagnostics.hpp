#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcl {

// Byte position in a source file, 1-based line/column. line == 0 means "no
// span available" (programmatically constructed terms).
struct Span {
  std::size_t line = 0;
  std::size_t column = 0;

  bool known() const { return line != 0; }
  std::string str() const {
    if (!known()) return "<builtin>";
    return std::to_string(line) + ":" + std::to_string(column);
  }
};

enum class ErrorCode {
  // frontend
  LexError,
  ParseError,
  UnknownName,
  DuplicateName,
  // pure fragment
  MalformedInput,
  MalformedPattern,
  UnboundVariable,
  LinearityViolation,
  NotNormalized,
  NonOrthogonalSummands,
  NotAnOnb,
  NotAnOnbExt,
  ClauseContextMismatch,
  UnitaryTypeMismatch,
  TypeMismatch,
  AmbiguousType,
  // main calculus
  ModalityMismatch,
  LiftUnderLinearContext,
  OutOfFragment,
  // backend
  TruncationOverflow,
  TruncationBoundary,
  DimensionCap,
  NonIsometryInput,
  // configurations
  IllFormedConfiguration,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::LexError: return "E-LEX";
    case ErrorCode::ParseError: return "E-PARSE";
    case ErrorCode::UnknownName: return "E-UNKNOWN-NAME";
    case ErrorCode::DuplicateName: return "E-DUP-NAME";
    case ErrorCode::MalformedInput: return "E-MALFORMED";
    case ErrorCode::MalformedPattern: return "E-PATTERN";
    case ErrorCode::UnboundVariable: return "E-UNBOUND";
    case ErrorCode::LinearityViolation: return "E-LINEAR";
    case ErrorCode::NotNormalized: return "E-NOT-NORMALIZED";
    case ErrorCode::NonOrthogonalSummands: return "E-NON-ORTHOGONAL";
    case ErrorCode::NotAnOnb: return "E-NOT-ONB";
    case ErrorCode::NotAnOnbExt: return "E-NOT-ONB-EXT";
    case ErrorCode::ClauseContextMismatch: return "E-CLAUSE-CTX";
    case ErrorCode::UnitaryTypeMismatch: return "E-UNITARY-TYPE";
    case ErrorCode::TypeMismatch: return "E-TYPE";
    case ErrorCode::AmbiguousType: return "E-AMBIGUOUS";
    case ErrorCode::ModalityMismatch: return "E-MODALITY";
    case ErrorCode::LiftUnderLinearContext: return "E-LIFT-LINEAR";
    case ErrorCode::OutOfFragment: return "E-FRAGMENT";
    case ErrorCode::TruncationOverflow: return "E-TRUNC-OVERFLOW";
    case ErrorCode::TruncationBoundary: return "E-TRUNC-BOUNDARY";
    case ErrorCode::DimensionCap: return "E-DIM-CAP";
    case ErrorCode::NonIsometryInput: return "E-NON-ISOMETRY";
    case ErrorCode::IllFormedConfiguration: return "E-CONFIG";
  }
  return "E-UNKNOWN";
}

// User-facing diagnostic: bad program, bad flag, bad file. Exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, Span span = {})
      : std::runtime_error(std::string(error_code_name(code)) + " at " +
                           span.str() + ": " + message),
        code_(code),
        span_(span) {}

  ErrorCode code() const { return code_; }
  Span span() const { return span_; }

 private:
  ErrorCode code_;
  Span span_;
};

// A broken internal invariant (e.g. a stuck well-formed configuration, which
// Progress rules out). Exit code 2.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& message)
      : std::logic_error("internal invariant violation: " + message) {}
};

}  // namespace qcl
