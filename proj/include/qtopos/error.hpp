#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtopos {

enum class ErrorKind {
  InvalidArgument,
  NotHermitian,
  NotProjector,
  NotUnitNorm,
  NonCommuting,
  DimensionMismatch,
  TrivialAlgebra,
  SizeLimit,
  UnknownBuiltin,
  NotGlobalElement,
  NotNatural,
  ParentMismatch,
  BaseMismatch,
  Ambiguity,
  NotInContext,
  DownwardClosureViolation,
  SyntaxError,
  ValidationError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotProjector: return "NotProjector";
    case ErrorKind::NotUnitNorm: return "NotUnitNorm";
    case ErrorKind::NonCommuting: return "NonCommuting";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TrivialAlgebra: return "TrivialAlgebra";
    case ErrorKind::SizeLimit: return "SizeLimit";
    case ErrorKind::UnknownBuiltin: return "UnknownBuiltin";
    case ErrorKind::NotGlobalElement: return "NotGlobalElement";
    case ErrorKind::NotNatural: return "NotNatural";
    case ErrorKind::ParentMismatch: return "ParentMismatch";
    case ErrorKind::BaseMismatch: return "BaseMismatch";
    case ErrorKind::Ambiguity: return "Ambiguity";
    case ErrorKind::NotInContext: return "NotInContext";
    case ErrorKind::DownwardClosureViolation: return "DownwardClosureViolation";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace qtopos
