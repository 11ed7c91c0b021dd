#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace berkson {

enum class ErrorCode {
  BadParams,
  BoundaryViolation,
  QueryOutsideDomain,
  BudgetExhausted,
  TooFewSamples,
  DegenerateDomain,
  DomainError,
  RootNotBracketed,
  RegimeViolation,
  DegenerateFit,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::BoundaryViolation: return "BoundaryViolation";
    case ErrorCode::QueryOutsideDomain: return "QueryOutsideDomain";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::RootNotBracketed: return "RootNotBracketed";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace berkson
