#pragma once

#include <string>
#include <vector>

#include "ssmopt/backbone.hpp"
#include "ssmopt/models.hpp"

namespace ssmopt {

/// Backbone point at a fixed physical amplitude of one DOF.
struct AmplitudeTarget {
  int dof = 0;
  double x0 = 0.0;
  int theta_samples = kDefaultThetaSamples;
};

/// Backbone quantities at the target amplitude.
struct TargetState {
  double rho = 0.0;
  double omega = 0.0;
  double dx_drho = 0.0;
  double domega_drho = 0.0;
  Vec x_samples;                   // x^i(rho, theta_k), k = 1..N
  std::vector<Complex> phase;      // e^{i theta_k}
};

TargetState evaluate_target(const SsmExpansion& exp, const AmplitudeTarget& target);

struct SensitivityReport {
  std::vector<std::string> params;
  Vec dOmega;
  std::string method;
  int order = 0;
  double x0 = 0.0;
  double rho = 0.0;
  double omega = 0.0;
  double seconds = 0.0;
  double max_imag = 0.0;  // largest discarded imaginary residue
};

std::string report_to_json(const SensitivityReport& r);

struct FdOptions {
  double rel_step = 1e-6;  // h = rel_step * (1 + |mu|)
  int theta_samples = kDefaultThetaSamples;
};

/// Omega at the target amplitude for the design vector mu: rebuild, track the
/// reference shape, expand to a fixed order and invert the amplitude.
double pipeline_omega(const ModelFactory& factory, const Vec& mu, const Vec& reference, int order,
                      const AmplitudeTarget& target);

struct FdReport {
  SensitivityReport report;
  Vec richardson_ratio;  // |D(2h) - D(4h)| / |D(h) - D(2h)|, about 4 in the asymptotic range
};

/// Central finite differences of the whole pipeline.
FdReport sensitivity_fd(const ModelFactory& factory, const Vec& mu, const Vec& reference, int order,
                        const AmplitudeTarget& target, const FdOptions& opts = {});

/// max_p |a_p - b_p| / max(|b_p|, floor * ||b||_inf)
double max_relative_error(const Vec& a, const Vec& b, double floor = 1e-6);

}  // namespace ssmopt
