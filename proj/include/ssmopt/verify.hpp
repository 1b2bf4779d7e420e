#pragma once

#include <string>
#include <vector>

#include "ssmopt/models.hpp"

namespace ssmopt {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity (error, residual, ...)
  double threshold = 0.0;  // pass bound for value
  std::string detail;
};

struct VerifyOptions {
  int order = 5;
  int dof = -1;          // -1: model default
  double x = 0.0;        // gradient check amplitude; <= 0 picks a mildly nonlinear one
  bool gradients = true;  // adjoint vs direct equivalence and reality
  unsigned seed = 2024;
};

/// Structural invariants of the model, the expansion, the backbone and the
/// sensitivities. Never throws for a failed check; errors inside a check are
/// reported as failures.
std::vector<CheckResult> run_invariants(const ModelFactory& factory, const VerifyOptions& opts = {});

std::string checks_to_json(const std::vector<CheckResult>& checks);

}  // namespace ssmopt
