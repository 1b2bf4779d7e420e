#pragma once

#include <stdexcept>
#include <string>

namespace ssmopt {

enum class ErrorCode : int {
  InvalidArgument = 1,
  InvalidConfig,
  InvalidModel,
  LightDamping,
  DegenerateMode,
  TrackingLost,
  OuterResonance,
  DegenerateParametrization,
  AmplitudeUnreachable,
  ConjugacyViolation,
  TurningPoint,
  SingularSystem,
  NotConverged,
};

/// Coarse grouping used for CLI exit codes.
enum class ErrorCategory { Config, Model, Ssm, Optimizer };

ErrorCategory category(ErrorCode code);
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace ssmopt
