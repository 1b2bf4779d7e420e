// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssmopt/backbone.hpp"
#include "ssmopt/error.hpp"
#include "ssmopt/models.hpp"
#include "ssmopt/optimizer.hpp"
#include "ssmopt/sens_adjoint.hpp"
#include "ssmopt/sens_direct.hpp"
#include "ssmopt/verify.hpp"

using namespace ssmopt;
using Clock = std::chrono::steady_clock;

namespace {

std::string config_dir = "configs";

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome eigenpair() {
  const auto t0 = Clock::now();
  const MasterPair mp = solve_master(make_catalog_model("chain2")->build(), 0);
  const double t = seconds_since(t0);
  auto sig4 = [](double v) { return std::round(v * 1e4) / 1e4; };
  const bool ok = sig4(mp.lambda.real()) == -0.0191 && sig4(mp.lambda.imag()) == 0.6177 && t < 1.0;
  return {ok, fmt("lambda = %.6f %+.6fi, %.3f s", mp.lambda.real(), mp.lambda.imag(), t)};
}

Outcome three_way() {
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    double x0;
  };
  double worst_ad = 0.0, worst_fd = 0.0;
  for (const Case c : {Case{"chain2", 0.5}, Case{"duffing1", 0.5}, Case{"vk_beam", 0.003}}) {
    const auto f = make_catalog_model(c.name);
    const MechModel m = f->build();
    const MasterPair mp = solve_master(m, 0);
    const AmplitudeTarget target{f->default_dof(), c.x0};
    for (int order : {3, 5, 7}) {
      const SsmExpansion e = compute_ssm(m, mp, order);
      const Vec a = sensitivity_adjoint(m, e, target).dOmega;
      const Vec d = sensitivity_direct(m, e, target).dOmega;
      const Vec fd = sensitivity_fd(*f, f->design_values(), mp.phi, order, target).report.dOmega;
      worst_ad = std::max(worst_ad, max_relative_error(a, d));
      worst_fd = std::max({worst_fd, max_relative_error(a, fd), max_relative_error(d, fd)});
    }
  }
  const double t = seconds_since(t0);
  return {worst_ad <= 1e-8 && worst_fd <= 1e-5 && t < 60.0,
          fmt("adjoint/direct %.2e, vs FD %.2e, %.1f s", worst_ad, worst_fd, t)};
}

Outcome first_order_prediction() {
  const auto f = make_catalog_model("chain2");  // params m, k, k2, k3
  const Vec mu = f->design_values();
  const Vec rel = (Vec(4) << 0.01, 0.01, 0.03, 0.03).finished();
  const int order = 5, dof = 1;
  const MechModel m = f->build(mu);
  const MasterPair mp = solve_master(m, 0);
  const SsmExpansion e = compute_ssm(m, mp, order);
  std::vector<double> xs;
  for (int i = 1; i <= 10; ++i) xs.push_back(0.05 * i);
  std::vector<double> omega0, dot;
  for (double x : xs) {
    const SensitivityReport r = sensitivity_adjoint(m, e, AmplitudeTarget{dof, x});
    omega0.push_back(r.omega);
    dot.push_back(r.dOmega.dot(Vec(rel.cwiseProduct(mu))));
  }
  // Largest prediction error over the amplitude targets for a perturbation s * delta.
  auto gap = [&](double s, double* rel_err) {
    const Vec mup = mu + s * rel.cwiseProduct(mu);
    const MechModel mq = f->build(mup);
    const SsmExpansion eq = compute_ssm(mq, track_mode(mq, mp.phi), order);
    double g = 0.0, r = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double actual = omega_of_rho(eq, rho_of_x(eq, dof, xs[i]));
      const double err = std::abs(actual - (omega0[i] + s * dot[i]));
      g = std::max(g, err);
      r = std::max(r, err / actual);
    }
    if (rel_err) *rel_err = r;
    return g;
  };
  std::vector<double> scales{0.01, 0.03, 0.1, 0.3, 1.0}, gaps;
  for (double s : scales) gaps.push_back(gap(s, nullptr));
  double at_full = 0.0;
  gap(1.0, &at_full);
  const double slope = loglog_slope(scales, gaps);
  return {std::abs(slope - 2.0) <= 0.3 && at_full <= 0.01,
          fmt("remainder slope %.3f, error at full perturbation %.2e of Omega", slope, at_full)};
}

Outcome duffing() {
  const MechModel m = make_catalog_model("duffing1")->build();
  const SsmExpansion e = compute_ssm(m, solve_master(m, 0), 3);
  // Harmonic balance: Omega^2 = 1 + (3/4) gamma a^2, a = 2 rho  =>  Omega = 1 + (3 gamma / 2) rho^2 + O(rho^4).
  const double expected = 1.5 * 0.1;
  const double rho = 1e-3;
  const double measured = (omega_of_rho(e, rho) - 1.0) / (rho * rho);
  const double err = std::abs(measured - expected);
  return {err <= 1e-6, fmt("coefficient %.10f vs %.10f", measured, expected)};
}

Outcome invariance_convergence() {
  const MechModel m = build_chain(ChainSpec::two_oscillators());
  const MasterPair mp = solve_master(m, 0);
  bool ok = true;
  std::string detail;
  double prev = INFINITY;
  for (int order : {3, 5, 7}) {
    const SsmExpansion e = compute_ssm(m, mp, order);
    const double eps = invariance_residual(m, e, 0.2).epsilon;
    ok = ok && eps <= prev;
    prev = eps;
    std::vector<double> rhos{0.05, 0.07, 0.1}, errs;
    for (double r : rhos) errs.push_back(invariance_residual(m, e, r).epsilon);
    const double slope = loglog_slope(rhos, errs);
    ok = ok && slope >= order - 0.5;
    detail += fmt("order %.0f: eps(0.2) %.2e slope %.2f; ", order, eps, slope);
  }
  return {ok, detail};
}

Outcome conjugate_symmetry() {
  const MechModel m = build_chain(ChainSpec::uniform(3, 1.0, 1.0, 0.3, 0.2, 0.0, 0.05));
  const MasterPair mp = solve_master(m, 0);
  const SsmExpansion canon = compute_ssm(m, mp, 7);
  const SsmExpansion full = compute_ssm(m, mp, 7, SsmOptions{true});
  double worst = 0.0;
  for (int o = 1; o <= 7; ++o)
    for (const auto& mi : enumerate_all(o)) {
      const IndexData& a = canon.at(mi);
      const IndexData& b = full.at(mi);
      worst = std::max(worst, (a.w - b.w).norm() / (1.0 + b.w.norm()));
      worst = std::max(worst, std::abs(a.R1 - b.R1) + std::abs(a.R2 - b.R2));
    }
  return {worst <= 1e-12, fmt("max coefficient deviation %.2e", worst)};
}

Outcome von_karman() {
  std::ifstream in(config_dir + "/vk_beam_optimize.json");
  if (!in) return {false, "cannot open " + config_dir + "/vk_beam_optimize.json"};
  std::stringstream ss;
  ss << in.rdbuf();
  const auto cfg = nlohmann::json::parse(ss.str());
  std::shared_ptr<const ModelFactory> factory = model_from_json(cfg["model"].dump());
  const OptProblem p = problem_from_json(cfg["optimize"].dump(), factory);
  const auto t0 = Clock::now();
  const OptResult r = solve(p);
  const double t = seconds_since(t0);
  const double omega0 = r.final.omega0;
  double worst = 0.0;
  for (int c = 0; c < r.final.omega.size(); ++c)
    worst = std::max(worst, std::abs(r.final.omega[c] - r.final.target[c]));
  bool inside = true;
  for (int v = 0; v < p.size(); ++v) inside = inside && r.mu[v] >= p.lower[v] && r.mu[v] <= p.upper[v];
  std::string detail = fmt("max |Omega - target| = %.2e (%.2e omega0), %.1f s, ", worst, worst / omega0, t);
  for (int v = 0; v < p.size(); ++v) detail += r.names[v] + "=" + fmt("%.6g ", r.mu[v]);
  return {r.converged && worst <= 1e-6 * omega0 && inside && t <= 120.0, detail};
}

Outcome adjoint_scaling() {
  const int n = 101, order = 5, repeats = 3;
  auto time_pair = [&](int np, double* adj, double* dir) {
    const MechModel m = build_chain(ChainSpec::bench(n, np));
    const SsmExpansion e = compute_ssm(m, solve_master(m, 0), order);
    const AmplitudeTarget target{n - 1, x_rms(e, n - 1, 0.05)};
    *adj = *dir = INFINITY;
    for (int r = 0; r < repeats; ++r) {
      auto t0 = Clock::now();
      sensitivity_adjoint(m, e, target);
      *adj = std::min(*adj, seconds_since(t0));
      t0 = Clock::now();
      sensitivity_direct(m, e, target);
      *dir = std::min(*dir, seconds_since(t0));
    }
  };
  double a1, d1, a100, d100;
  time_pair(1, &a1, &d1);
  time_pair(100, &a100, &d100);
  const bool ok = d100 >= 20.0 * d1 && a100 <= 2.0 * a1 && d100 >= 5.0 * a100;
  return {ok, fmt("direct x%.1f, adjoint x%.2f, speedup at 100 params %.1f", d100 / d1, a100 / a1, d100 / a100)};
}

Outcome invariants() {
  int failures = 0, total = 0;
  std::string failed;
  bool required = true;
  for (const auto& name : model_catalog()) {
    const auto checks = run_invariants(*make_catalog_model(name));
    for (const char* must : {"even-order-R-zero", "omega-at-zero", "xrms-ntheta-exactness", "mac-scale-invariance"}) {
      bool found = false;
      for (const auto& c : checks) found = found || c.name == must;
      required = required && found;
    }
    for (const auto& c : checks) {
      ++total;
      if (!c.passed) {
        ++failures;
        failed += " " + name + "/" + c.name;
      }
    }
  }
  return {failures == 0 && required, fmt("%.0f checks, %.0f failures", total, failures) + failed};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) config_dir = argv[1];
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"eigenpair regression", eigenpair},
      {"three-way gradient equivalence", three_way},
      {"first-order backbone prediction", first_order_prediction},
      {"Duffing analytic backbone", duffing},
      {"invariance residual convergence", invariance_convergence},
      {"conjugate symmetry", conjugate_symmetry},
      {"von Karman optimization", von_karman},
      {"adjoint scaling", adjoint_scaling},
      {"structural invariants", invariants},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
