#include "ssmopt/sensitivity.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "ssmopt/error.hpp"

namespace ssmopt {

TargetState evaluate_target(const SsmExpansion& exp, const AmplitudeTarget& target) {
  TargetState s;
  s.rho = rho_of_x(exp, target.dof, target.x0, target.theta_samples);
  s.omega = omega_of_rho(exp, s.rho);
  s.dx_drho = dx_drho(exp, target.dof, s.rho, target.theta_samples);
  s.domega_drho = domega_drho(exp, s.rho);
  s.x_samples = displacement_samples(exp, target.dof, s.rho, target.theta_samples);
  s.phase.resize(target.theta_samples);
  for (int k = 1; k <= target.theta_samples; ++k)
    s.phase[k - 1] = std::polar(1.0, 2.0 * std::numbers::pi * k / target.theta_samples);
  return s;
}

std::string report_to_json(const SensitivityReport& r) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t p = 0; p < r.params.size(); ++p)
    j.push_back({{"param", r.params[p]}, {"dOmega", r.dOmega[p]}, {"method", r.method}, {"order", r.order},
                 {"x0", r.x0}});
  return j.dump(2);
}

double pipeline_omega(const ModelFactory& factory, const Vec& mu, const Vec& reference, int order,
                      const AmplitudeTarget& target) {
  const MechModel m = factory.build(mu);
  const MasterPair mp = track_mode(m, reference);
  const SsmExpansion exp = compute_ssm(m, mp, order);
  return omega_of_rho(exp, rho_of_x(exp, target.dof, target.x0, target.theta_samples));
}

FdReport sensitivity_fd(const ModelFactory& factory, const Vec& mu, const Vec& reference, int order,
                        const AmplitudeTarget& target, const FdOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  FdReport out;
  SensitivityReport& r = out.report;
  r.params = factory.design_names();
  r.method = "finite-difference";
  r.order = order;
  r.x0 = target.x0;
  r.omega = pipeline_omega(factory, mu, reference, order, target);
  const int np = static_cast<int>(mu.size());
  r.dOmega.resize(np);
  out.richardson_ratio.resize(np);
  auto central = [&](int p, double h) {
    Vec a = mu, b = mu;
    a[p] += h;
    b[p] -= h;
    return (pipeline_omega(factory, a, reference, order, target) -
            pipeline_omega(factory, b, reference, order, target)) /
           (2.0 * h);
  };
  for (int p = 0; p < np; ++p) {
    const double h = opts.rel_step * (1.0 + std::abs(mu[p]));
    const double d1 = central(p, h);
    const double d2 = central(p, 2.0 * h);
    const double d4 = central(p, 4.0 * h);
    r.dOmega[p] = d1;
    const double den = std::abs(d1 - d2);
    out.richardson_ratio[p] = den > 0.0 ? std::abs(d2 - d4) / den : 0.0;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double max_relative_error(const Vec& a, const Vec& b, double floor) {
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "gradient sizes differ");
  if (a.size() == 0) return 0.0;
  const double scale = std::max(b.cwiseAbs().maxCoeff(), a.cwiseAbs().maxCoeff());
  double e = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = std::max(std::abs(b[i]), floor * scale);
    if (d == 0.0) continue;
    e = std::max(e, std::abs(a[i] - b[i]) / d);
  }
  return e;
}

}  // namespace ssmopt
