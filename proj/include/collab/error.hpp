#pragma once

#include <stdexcept>
#include <string>

namespace collab {

enum class ErrorCode {
  Infeasible,
  NumericalFailure,
  NotHierarchical,
  UnsupportedTopology,
  PolicyError,
  EventOverflow,
  NotPositiveDefinite,
  InvalidNetwork,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NotHierarchical: return "NotHierarchical";
    case ErrorCode::UnsupportedTopology: return "UnsupportedTopology";
    case ErrorCode::PolicyError: return "PolicyError";
    case ErrorCode::EventOverflow: return "EventOverflow";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidNetwork: return "InvalidNetwork";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace collab
