#pragma once

#include <vector>

#include "ssmopt/sensitivity.hpp"

namespace ssmopt {

/// Adjoint variables of the backbone Lagrangian and the accumulated operator
/// adjoints needed for the per-parameter contraction.
struct AdjointState {
  double lambda_rho = 0.0;
  std::vector<CVec> lambda_w;  // flat multi-index layout; entries for solved indices only
  Vec lambda_phi;
  double lambda_omega = 0.0;

  // dOmega = <barM, dM> + <barK, dK> + sum_q barF_q . (dT2, dT3 terms)
  Mat barM;
  Mat barK;
  std::vector<CVec> bar_f;       // flat layout, solved indices only
  std::vector<double> f_weight;  // 2 for mirrored indices, 1 otherwise
  double imag_residue = 0.0;
};

/// lambda_rho = -(dOmega/drho) / (dx/drho).
double solve_adjoint_rho(const TargetState& state);

/// Reverse sweep over the expansion, from the highest order down, followed by
/// the bordered eigenpair adjoint.
AdjointState solve_adjoint(const MechModel& model, const SsmExpansion& exp, const TargetState& state,
                           const AmplitudeTarget& target);

/// dOmega/dmu_p for every parameter of the model.
Vec contract_gradient(const MechModel& model, const SsmExpansion& exp, const AdjointState& adj);

SensitivityReport sensitivity_adjoint(const MechModel& model, const SsmExpansion& exp,
                                      const AmplitudeTarget& target);

}  // namespace ssmopt
