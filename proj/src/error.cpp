#include "ssmopt/error.hpp"

namespace ssmopt {

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
      return ErrorCategory::Config;
    case ErrorCode::InvalidModel:
    case ErrorCode::LightDamping:
    case ErrorCode::DegenerateMode:
    case ErrorCode::TrackingLost:
      return ErrorCategory::Model;
    case ErrorCode::NotConverged:
      return ErrorCategory::Optimizer;
    default:
      return ErrorCategory::Ssm;
  }
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::InvalidModel: return "invalid-model";
    case ErrorCode::LightDamping: return "light-damping-violation";
    case ErrorCode::DegenerateMode: return "degenerate-mode";
    case ErrorCode::TrackingLost: return "tracking-lost";
    case ErrorCode::OuterResonance: return "outer-resonance";
    case ErrorCode::DegenerateParametrization: return "degenerate-parametrization";
    case ErrorCode::AmplitudeUnreachable: return "amplitude-unreachable";
    case ErrorCode::ConjugacyViolation: return "conjugacy-violation";
    case ErrorCode::TurningPoint: return "turning-point";
    case ErrorCode::SingularSystem: return "singular-system";
    case ErrorCode::NotConverged: return "not-converged";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace ssmopt
