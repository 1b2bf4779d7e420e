#include "ssmopt/backbone.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "ssmopt/error.hpp"

namespace ssmopt {

namespace {

void check_dof(const SsmExpansion& exp, int dof) {
  if (dof < 0 || dof >= exp.master.phi.size()) fail(ErrorCode::InvalidArgument, "observed DOF out of range");
}

void check_theta(const SsmExpansion& exp, int n_theta) {
  if (n_theta < 2 * exp.order + 1)
    fail(ErrorCode::InvalidArgument, "theta grid too coarse for the expansion order (need N >= 2 order + 1)");
}

}  // namespace

double omega_of_rho(const SsmExpansion& exp, double rho) {
  if (rho < 0.0) fail(ErrorCode::InvalidArgument, "rho must be nonnegative");
  const Complex half_i(0.0, 0.5);
  Complex om = half_i * (exp.master.lambda_bar - exp.master.lambda);
  for (int o = 3; o <= exp.order; o += 2) {
    Complex s(0.0);
    for (const auto& m : enumerate_all(o)) {
      const IndexData& d = exp.at(m);
      s += d.R2 - d.R1;
    }
    om += half_i * s * std::pow(rho, o - 1);
  }
  return om.real();
}

double omega_of_rho_compact(const SsmExpansion& exp, double rho) {
  if (rho < 0.0) fail(ErrorCode::InvalidArgument, "rho must be nonnegative");
  double om = exp.master.lambda.imag();
  for (int o = 3; o <= exp.order; o += 2)
    for (const auto& m : enumerate(o).indices) om += exp.at(m).R1.imag() * std::pow(rho, o - 1);
  return om;
}

double domega_drho(const SsmExpansion& exp, double rho) {
  const Complex half_i(0.0, 0.5);
  Complex s(0.0);
  for (int o = 3; o <= exp.order; o += 2)
    for (const auto& m : enumerate_all(o)) {
      const IndexData& d = exp.at(m);
      s += half_i * (d.R2 - d.R1) * double(o - 1) * std::pow(rho, o - 2);
    }
  return s.real();
}

Vec displacement_samples(const SsmExpansion& exp, int dof, double rho, int n_theta, int max_order) {
  check_dof(exp, dof);
  const int top = max_order > 0 ? std::min(max_order, exp.order) : exp.order;
  Vec out(n_theta);
  for (int k = 1; k <= n_theta; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n_theta;
    Complex x(0.0);
    double scale = 0.0;
    double rp = 1.0;
    for (int o = 1; o <= top; ++o) {
      rp *= rho;
      for (const auto& m : enumerate_all(o)) {
        const Complex t = exp.at(m).w[dof] * std::polar(rp, (m.m1 - m.m2) * th);
        x += t;
        scale += std::abs(t);
      }
    }
    if (std::abs(x.imag()) > 1e-10 * std::max(scale, 1e-300))
      fail(ErrorCode::ConjugacyViolation, "physical displacement has a non-negligible imaginary part");
    out[k - 1] = x.real();
  }
  return out;
}

double x_rms(const SsmExpansion& exp, int dof, double rho, int n_theta, int max_order) {
  if (rho < 0.0) fail(ErrorCode::InvalidArgument, "rho must be nonnegative");
  check_theta(exp, n_theta);
  const Vec xs = displacement_samples(exp, dof, rho, n_theta, max_order);
  return std::sqrt(xs.squaredNorm() / n_theta);
}

double dx_drho(const SsmExpansion& exp, int dof, double rho, int n_theta) {
  check_theta(exp, n_theta);
  const Vec xs = displacement_samples(exp, dof, rho, n_theta);
  const double x = std::sqrt(xs.squaredNorm() / n_theta);
  if (x == 0.0) {
    // Limit rho -> 0: x = rho * rms of the order-1 part.
    return x_rms(exp, dof, 1.0, n_theta, 1);
  }
  double acc = 0.0;
  for (int k = 1; k <= n_theta; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n_theta;
    Complex dxk(0.0);
    for (int o = 1; o <= exp.order; ++o) {
      const double rp = o * std::pow(rho, o - 1);
      for (const auto& m : enumerate_all(o)) dxk += exp.at(m).w[dof] * std::polar(rp, (m.m1 - m.m2) * th);
    }
    acc += xs[k - 1] * dxk.real();
  }
  return acc / (n_theta * x);
}

double rho_of_x(const SsmExpansion& exp, int dof, double x0, int n_theta) {
  if (!(x0 > 0.0)) fail(ErrorCode::InvalidArgument, "target amplitude must be positive");
  check_dof(exp, dof);
  check_theta(exp, n_theta);
  const double lin = x_rms(exp, dof, 1.0, n_theta, 1);
  if (lin == 0.0) fail(ErrorCode::AmplitudeUnreachable, "observed DOF has no modal participation");

  auto xf = [&](double r) { return x_rms(exp, dof, r, n_theta); };
  // Inside the validity radius the last two truncations agree to 10%.
  auto valid = [&](double r, double xr) {
    return std::abs(xr - x_rms(exp, dof, r, n_theta, exp.order - 2)) <= 0.1 * xr;
  };
  auto unreachable = [&]() {
    // Largest x on the increasing, valid branch.
    double r = 1e-3 * x0 / lin, best = 0.0;
    for (int i = 0; i < 400; ++i) {
      const double xr = xf(r);
      if (xr <= best || !valid(r, xr)) break;
      best = xr;
      r *= 1.05;
    }
    std::ostringstream os;
    os.precision(10);
    os << "target x = " << x0 << " beyond the validity radius of the expansion; max attainable x = " << best;
    fail(ErrorCode::AmplitudeUnreachable, os.str());
  };

  double lo = 0.0, xlo = 0.0;
  double hi = x0 / lin;
  double xhi = xf(hi);
  int guard = 0;
  while (xhi < x0) {
    if (xhi <= xlo || !valid(hi, xhi)) unreachable();
    lo = hi;
    xlo = xhi;
    hi *= 1.5;
    xhi = xf(hi);
    if (++guard > 200) fail(ErrorCode::AmplitudeUnreachable, "bracket search failed");
  }

  auto finish = [&](double r) {
    if (!valid(r, xf(r)) || dx_drho(exp, dof, r, n_theta) <= 0.0) unreachable();
    return r;
  };
  double r = lo + (hi - lo) * (x0 - xlo) / (xhi - xlo);
  for (int it = 0; it < 200; ++it) {
    const double xr = xf(r);
    const double g = xr - x0;
    if (std::abs(g) <= 4e-16 * x0) return finish(r);
    if (g < 0.0)
      lo = r;
    else
      hi = r;
    const double dx = dx_drho(exp, dof, r, n_theta);
    double next = dx > 0.0 ? r - g / dx : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * hi) return finish(r);
    if (std::abs(next - r) <= 1e-16 * r) return finish(next);
    r = next;
  }
  if (std::abs(xf(r) - x0) <= 1e-10 * x0) return finish(r);
  fail(ErrorCode::NotConverged, "rho_of_x did not converge");
}

BackboneCurve sample_backbone(const SsmExpansion& exp, int dof, const std::vector<double>& x_targets,
                              int n_theta) {
  BackboneCurve c;
  c.dof = dof;
  c.theta_samples = n_theta;
  for (std::size_t i = 0; i < x_targets.size(); ++i) {
    if (!(x_targets[i] > 0.0)) fail(ErrorCode::InvalidArgument, "amplitude targets must be positive");
    if (i > 0 && x_targets[i] < x_targets[i - 1])
      fail(ErrorCode::InvalidArgument, "amplitude targets must be ascending");
  }
  for (double x0 : x_targets) {
    const double r = rho_of_x(exp, dof, x0, n_theta);
    c.points.push_back({r, omega_of_rho(exp, r), x0});
  }
  return c;
}

AdaptResult adapt_for_amplitude(const MechModel& model, const MasterPair& master, int dof, double x_max, double tol,
                                int min_order, int max_order, int theta_samples) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (max_order < min_order) fail(ErrorCode::InvalidArgument, "max order below min order");
  AdaptResult r;
  r.expansion = compute_ssm(model, master, min_order);
  for (;;) {
    const double rho = rho_of_x(r.expansion, dof, x_max, theta_samples);
    r.error = invariance_residual(model, r.expansion, rho);
    r.history.emplace_back(r.expansion.order, r.error.epsilon);
    if (r.error.epsilon <= tol) break;
    if (r.expansion.order + 2 > max_order) {
      r.converged = false;
      break;
    }
    extend_ssm(model, r.expansion, r.expansion.order + 2);
  }
  return r;
}

std::string backbone_to_csv(const BackboneCurve& curve) {
  std::string out = "rho,omega,x\n";
  char buf[128];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.rho, p.omega, p.x);
    out += buf;
  }
  return out;
}

}  // namespace ssmopt
