#pragma once

#include <stdexcept>
#include <string>

namespace torusflow {

/// Stable error categories surfaced by the library and mapped to CLI exit
/// codes. Simulation terminations (positivity loss, blow-up ceiling, NaN)
/// are NOT exceptions; they are reported through RunResult::cause.
enum class ErrorCode {
  invalid_input,        // bad arguments, malformed config, broken invariants
  cohomology_mismatch,  // class condition mean(alpha) = -lambda*mean(omega) violated
  ball_too_large,       // cutoff ball does not embed in the torus
  insufficient_samples, // fewer samples than an estimator needs
  missing_run,          // run directory or required artifact absent
  io_error,             // filesystem read/write failure
};

class TfError : public std::runtime_error {
public:
  TfError(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::cohomology_mismatch: return "cohomology_mismatch";
    case ErrorCode::ball_too_large: return "ball_too_large";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::missing_run: return "missing_run";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

} // namespace torusflow
