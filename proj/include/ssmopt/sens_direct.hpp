#pragma once

#include <vector>

#include "ssmopt/sensitivity.hpp"

namespace ssmopt {

struct EigenDerivative {
  Vec dphi;
  double domega = 0.0;
};

/// Bordered system [[K - w^2 M, -2 w M phi], [-2 w phi^T M, 0]] for the
/// derivatives of a mass-normalized simple eigenpair. Factorized once.
class EigenSensitivity {
 public:
  EigenSensitivity(const MechModel& model, const MasterPair& master);
  EigenDerivative solve(const SpMat& dM, const SpMat& dK) const;
  /// Solves the same (symmetric) system for an arbitrary right-hand side.
  Vec solve_raw(const Vec& rhs) const;

 private:
  const MechModel& model_;
  const MasterPair& master_;
  double scale_ = 1.0;
  Eigen::PartialPivLU<Mat> lu_;
};

std::vector<EigenDerivative> eig_derivatives(const MechModel& model, const MasterPair& master);

struct IndexDerivative {
  CVec dw;
  CVec dwdot;
  Complex dR1;
  Complex dR2;
};

struct DirectDerivatives {
  std::string param;
  double dOmega = 0.0;
  double dRho = 0.0;
  Vec dPhi;
  double dOmega0 = 0.0;
  Complex dLambda;
  double dXi = 0.0;
  std::vector<IndexDerivative> coeffs;  // flat multi-index layout
  double imag_residue = 0.0;
};

/// Forward-mode differentiation of the whole pipeline for one parameter.
DirectDerivatives chain_derivatives(const MechModel& model, const SsmExpansion& exp, const TargetState& state,
                                    const AmplitudeTarget& target, int param, const EigenSensitivity& eig);

SensitivityReport sensitivity_direct(const MechModel& model, const SsmExpansion& exp,
                                     const AmplitudeTarget& target);

}  // namespace ssmopt
