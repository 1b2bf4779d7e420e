#pragma once

#include <vector>

#include "ssmopt/ssm.hpp"

namespace ssmopt {

inline constexpr int kDefaultThetaSamples = 128;

struct BackbonePoint {
  double rho = 0.0;
  double omega = 0.0;
  double x = 0.0;
};

struct BackboneCurve {
  int dof = 0;
  int theta_samples = kDefaultThetaSamples;
  std::vector<BackbonePoint> points;
};

/// Omega(rho) from the symmetric form (1/2) i (lambda_bar - lambda) + (1/2) i sum (R2 - R1) rho^(|m|-1).
double omega_of_rho(const SsmExpansion& exp, double rho);
/// Omega(rho) = Im(lambda) + sum Im(R1_m) rho^(|m|-1) over canonical resonant indices.
double omega_of_rho_compact(const SsmExpansion& exp, double rho);
double domega_drho(const SsmExpansion& exp, double rho);

/// RMS over theta_k = 2 pi k / N of the displacement of one DOF. Terms above
/// max_order are ignored when max_order > 0.
double x_rms(const SsmExpansion& exp, int dof, double rho, int theta_samples = kDefaultThetaSamples,
             int max_order = 0);
double dx_drho(const SsmExpansion& exp, int dof, double rho, int theta_samples = kDefaultThetaSamples);

/// Samples x^i(rho, theta_k) for k = 1..N (real parts, conjugacy checked).
Vec displacement_samples(const SsmExpansion& exp, int dof, double rho, int theta_samples, int max_order = 0);

/// Inverts x_rms(rho) = x0 by bracketing plus safeguarded Newton.
double rho_of_x(const SsmExpansion& exp, int dof, double x0, int theta_samples = kDefaultThetaSamples);

BackboneCurve sample_backbone(const SsmExpansion& exp, int dof, const std::vector<double>& x_targets,
                              int theta_samples = kDefaultThetaSamples);

std::string backbone_to_csv(const BackboneCurve& curve);

/// Raises the order from min_order until the invariance error at the rho of
/// the largest amplitude target is below tol (or max_order is reached). The
/// rho is recomputed after every increase because it depends on the order.
AdaptResult adapt_for_amplitude(const MechModel& model, const MasterPair& master, int dof, double x_max, double tol,
                                int min_order, int max_order, int theta_samples = kDefaultThetaSamples);

}  // namespace ssmopt
