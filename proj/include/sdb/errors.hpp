#pragma once

#include <stdexcept>
#include <string>

namespace sdb {

// Stable error taxonomy so harnesses can classify failures from the CLI.
enum class ErrorCode {
  CertificateFailed,
  FeasibilityFailed,
  NonConvergence,
  Io,
  DimMismatch,
  BadArgument,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::CertificateFailed: return "CERTIFICATE_FAILED";
    case ErrorCode::FeasibilityFailed: return "FEASIBILITY_FAILED";
    case ErrorCode::NonConvergence: return "NONCONVERGENCE";
    case ErrorCode::Io: return "IO";
    case ErrorCode::DimMismatch: return "DIM_MISMATCH";
    case ErrorCode::BadArgument: return "BAD_ARGS";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

} // namespace sdb
