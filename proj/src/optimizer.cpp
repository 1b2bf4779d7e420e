#include "ssmopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "json.hpp"
#include "ssmopt/backbone.hpp"
#include "ssmopt/error.hpp"
#include "ssmopt/sens_adjoint.hpp"
#include "ssmopt/sens_direct.hpp"

namespace ssmopt {

namespace {

std::string strip_code(const Error& e) {
  const std::string w = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

// d omega_k / d mu_p for a mass-normalized mode.
Vec eigfreq_gradient(const MechModel& model, double omega, const Vec& phi) {
  Vec g(model.param_count());
  for (int p = 0; p < model.param_count(); ++p) {
    const auto& d = model.params[p];
    g[p] = (phi.dot(d.dK * phi) - omega * omega * phi.dot(d.dM * phi)) / (2.0 * omega);
  }
  return g;
}

struct AmplitudeProbe {
  int dof;
  double x;
};

}  // namespace

void OptProblem::validate() const {
  if (!factory) fail(ErrorCode::InvalidConfig, "optimization problem has no model");
  const int n = static_cast<int>(factory->design_names().size());
  if (n == 0) fail(ErrorCode::InvalidConfig, "model declares no design variables");
  if (lower.size() != n || upper.size() != n)
    fail(ErrorCode::InvalidConfig, "bounds must be given for every design variable");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      fail(ErrorCode::InvalidConfig, "bounds of '" + factory->design_names()[i] + "' must be finite with lower < upper");
  if (initial.size() != 0 && initial.size() != n)
    fail(ErrorCode::InvalidConfig, "initial point has the wrong size");
  if (objective.empty() && constraint_count() == 0)
    fail(ErrorCode::InvalidConfig, "problem needs an objective or at least one constraint");
  for (const auto& t : objective)
    for (int v : t.vars)
      if (v < 0 || v >= n) fail(ErrorCode::InvalidConfig, "objective references an unknown variable");
  for (const auto& c : backbone)
    if (!(c.x > 0.0)) fail(ErrorCode::InvalidConfig, "backbone constraint amplitude must be positive");
  if (tol.min_order < 3 || tol.min_order % 2 == 0 || tol.max_order < tol.min_order || tol.max_order % 2 == 0)
    fail(ErrorCode::InvalidConfig, "expansion orders must be odd, >= 3, with minOrder <= maxOrder");
  if (!(tol.constraint_tol > 0.0) || !(tol.step_tol > 0.0) || !(tol.eps_tol > 0.0) || tol.max_iter < 1)
    fail(ErrorCode::InvalidConfig, "tolerances must be positive");
  if (!(bound_push >= 0.0 && bound_push < 0.5)) fail(ErrorCode::InvalidConfig, "bound push must lie in [0, 0.5)");
}

int order_policy(double epsilon, double eps_tol, int current, int max_order) {
  if (epsilon > eps_tol && current + 2 <= max_order) return current + 2;
  return current;
}

Evaluator::Evaluator(const OptProblem& problem) : problem_(problem), order_(problem.tol.min_order) {
  problem.validate();
  const Vec mu0 = problem.initial.size() ? problem.initial : problem.factory->design_values();
  const MechModel model = problem.factory->build(mu0);
  const MasterPair mp = solve_master(model, problem.mode);
  reference_ = mp.phi;
  omega0_ = mp.omega;
  for (const auto& c : problem.backbone) targets_.push_back(c.omega.resolve(omega0_));
  for (const auto& c : problem.eigfreq) targets_.push_back(c.omega.resolve(omega0_));
  for (double t : targets_)
    if (!(t > 0.0)) fail(ErrorCode::InvalidConfig, "target frequencies must be positive");
}

void Evaluator::accept(const Evaluation& e) { reference_ = e.phi; }

Evaluation Evaluator::evaluate(const Vec& mu, bool adapt, bool gradient) {
  const OptProblem& pb = problem_;
  Evaluation e;
  e.mu = mu;
  e.omega0 = omega0_;
  e.has_gradient = gradient;
  const int np = static_cast<int>(mu.size());
  const int nb = static_cast<int>(pb.backbone.size());
  const int nc = pb.constraint_count();

  const MechModel model = pb.factory->build(mu);
  const MasterPair mp = track_mode(model, reference_, pb.mac_threshold);
  e.mac = mp.mac;
  e.phi = mp.phi;
  auto resolve_dof = [&](int dof) { return dof < 0 ? pb.factory->default_dof() : dof; };

  std::vector<AmplitudeProbe> probes;
  for (const auto& c : pb.backbone) probes.push_back({resolve_dof(c.dof), c.x});
  for (const auto& t : pb.objective)
    if (t.response == Response::Backbone) probes.push_back({resolve_dof(t.dof), t.x});

  std::optional<SsmExpansion> exp;
  if (!probes.empty()) {
    exp = compute_ssm(model, mp, order_);
    for (;;) {
      double rho_max = 0.0;
      for (const auto& p : probes)
        rho_max = std::max(rho_max, rho_of_x(*exp, p.dof, p.x, pb.theta_samples));
      e.epsilon = invariance_residual(model, *exp, rho_max).epsilon;
      if (!adapt) break;
      const int next = order_policy(e.epsilon, pb.tol.eps_tol, exp->order, pb.tol.max_order);
      if (next == exp->order) break;
      extend_ssm(model, *exp, next);
      order_ = next;
    }
  }
  e.order = order_;

  // Omega and dOmega/dmu at one amplitude.
  auto backbone_response = [&](int dof, double x, Vec* grad) {
    const AmplitudeTarget t{dof, x, pb.theta_samples};
    if (!grad) return omega_of_rho(*exp, rho_of_x(*exp, dof, x, pb.theta_samples));
    const SensitivityReport r = pb.gradient == GradientMethod::Adjoint ? sensitivity_adjoint(model, *exp, t)
                                                                        : sensitivity_direct(model, *exp, t);
    *grad = r.dOmega;
    return r.omega;
  };

  e.omega.resize(nc);
  e.target = Eigen::Map<const Vec>(targets_.data(), nc);
  e.constraints.resize(nc);
  if (gradient) e.jacobian = Mat::Zero(nc, np);
  for (int j = 0; j < nb; ++j) {
    Vec g;
    e.omega[j] = backbone_response(resolve_dof(pb.backbone[j].dof), pb.backbone[j].x, gradient ? &g : nullptr);
    if (gradient) e.jacobian.row(j) = g.transpose() / std::abs(e.target[j]);
  }
  if (!pb.eigfreq.empty()) {
    const ModalBasis basis = modal_basis(model);
    for (std::size_t q = 0; q < pb.eigfreq.size(); ++q) {
      const int j = nb + static_cast<int>(q);
      const int k = pb.eigfreq[q].mode;
      if (k < 0 || k >= basis.omega.size()) fail(ErrorCode::InvalidConfig, "eigfreq constraint mode out of range");
      e.omega[j] = basis.omega[k];
      if (gradient)
        e.jacobian.row(j) = eigfreq_gradient(model, basis.omega[k], basis.phi.col(k)).transpose() /
                            std::abs(e.target[j]);
    }
  }
  for (int j = 0; j < nc; ++j) e.constraints[j] = (e.omega[j] - e.target[j]) / std::abs(e.target[j]);

  e.objective = 0.0;
  if (gradient) e.grad_objective = Vec::Zero(np);
  for (const auto& t : pb.objective) {
    double r = 1.0;
    Vec dr = Vec::Zero(np);
    if (t.response == Response::Omega0) {
      r = mp.omega;
      if (gradient) dr = eigfreq_gradient(model, mp.omega, mp.phi);
    } else if (t.response == Response::Backbone) {
      r = backbone_response(resolve_dof(t.dof), t.x, gradient ? &dr : nullptr);
    }
    double prod = 1.0;
    for (int v : t.vars) prod *= mu[v];
    e.objective += t.coef * prod * r;
    if (!gradient) continue;
    e.grad_objective += t.coef * prod * dr;
    for (std::size_t a = 0; a < t.vars.size(); ++a) {
      double others = 1.0;
      for (std::size_t b = 0; b < t.vars.size(); ++b)
        if (b != a) others *= mu[t.vars[b]];
      e.grad_objective[t.vars[a]] += t.coef * others * r;
    }
  }
  return e;
}

namespace {

struct QpResult {
  Vec d;
  Vec nu;  // stationarity: g + B d + A^T nu + bound multipliers = 0
};

// min g^T d + 1/2 d^T B d  s.t.  A d = b,  lo <= d <= hi.
// Active set on the bounds; the equality-constrained subproblem is solved in
// the least-squares sense so that an inconsistent linearization still yields
// a step.
QpResult solve_qp(const Mat& B, const Vec& g, const Mat& A, const Vec& b, const Vec& lo, const Vec& hi) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(b.size());
  std::vector<int> state(n, 0);  // 0 free, -1 at lower, +1 at upper
  QpResult r;
  r.d = Vec::Zero(n);
  r.nu = Vec::Zero(m);
  std::set<std::vector<int>> seen;
  for (int iter = 0; iter < 4 * n + 20; ++iter) {
    std::vector<int> free;
    Vec dfix = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (state[i] == 0) free.push_back(i);
      else dfix[i] = state[i] < 0 ? lo[i] : hi[i];
    }
    const int nf = static_cast<int>(free.size());
    Mat K = Mat::Zero(nf + m, nf + m);
    Vec rhs(nf + m);
    const Vec Bd = B * dfix;
    const Vec Ad = A * dfix;
    for (int a = 0; a < nf; ++a) {
      for (int c = 0; c < nf; ++c) K(a, c) = B(free[a], free[c]);
      for (int j = 0; j < m; ++j) K(a, nf + j) = K(nf + j, a) = A(j, free[a]);
      rhs[a] = -g[free[a]] - Bd[free[a]];
    }
    for (int j = 0; j < m; ++j) rhs[nf + j] = b[j] - Ad[j];
    const Vec sol = K.completeOrthogonalDecomposition().solve(rhs);
    Vec d = dfix;
    for (int a = 0; a < nf; ++a) d[free[a]] = sol[a];
    r.d = d;
    r.nu = sol.tail(m);

    // Fix the worst bound violation, if any.
    int worst = -1;
    double worst_v = 1e-14;
    for (int i : free) {
      const double v = std::max(lo[i] - d[i], d[i] - hi[i]);
      if (v > worst_v) {
        worst_v = v;
        worst = i;
      }
    }
    if (worst >= 0) {
      state[worst] = d[worst] < lo[worst] ? -1 : 1;
      continue;
    }
    // Release the bound with the most wrong-signed multiplier.
    const Vec grad = g + B * d + A.transpose() * r.nu;
    int release = -1;
    double release_v = 1e-12 * (1.0 + g.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
      const double v = state[i] < 0 ? -grad[i] : state[i] > 0 ? grad[i] : 0.0;
      if (v > release_v) {
        release_v = v;
        release = i;
      }
    }
    if (release < 0 || !seen.insert(state).second) break;
    state[release] = 0;
  }
  r.d = r.d.cwiseMax(lo).cwiseMin(hi);
  return r;
}

// Least-squares multipliers and the projected Lagrangian gradient at z.
double stationarity(const Vec& g, const Mat& A, const Vec& z, Vec* nu_out) {
  const int n = static_cast<int>(g.size());
  std::vector<int> free;
  for (int i = 0; i < n; ++i) free.push_back(i);
  Vec nu = Vec::Zero(A.rows());
  Vec r = g;
  for (int pass = 0; pass < 2; ++pass) {
    if (A.rows() > 0 && !free.empty()) {
      Mat Af(free.size(), A.rows());
      Vec gf(free.size());
      for (std::size_t a = 0; a < free.size(); ++a) {
        Af.row(a) = A.col(free[a]).transpose();
        gf[a] = g[free[a]];
      }
      nu = Af.completeOrthogonalDecomposition().solve(-gf);
    }
    r = g + A.transpose() * nu;
    // Drop variables pinned at a bound with a correctly signed gradient, then refit.
    std::vector<int> next;
    for (int i = 0; i < n; ++i) {
      const bool at_lo = z[i] <= 1e-12 && r[i] > 0.0;
      const bool at_hi = z[i] >= 1.0 - 1e-12 && r[i] < 0.0;
      if (!at_lo && !at_hi) next.push_back(i);
    }
    if (next == free) break;
    free = next;
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = r[i];
    if (z[i] <= 1e-12) v = std::min(v, 0.0);
    if (z[i] >= 1.0 - 1e-12) v = std::max(v, 0.0);
    s = std::max(s, std::abs(v));
  }
  if (nu_out) *nu_out = nu;
  return s;
}

}  // namespace

OptResult solve(const OptProblem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  Evaluator ev(problem);
  OptResult res;
  res.names = problem.factory->design_names();
  const int n = problem.size();
  const Vec range = problem.upper - problem.lower;
  const Vec mu_init = problem.initial.size() ? problem.initial : problem.factory->design_values();
  auto to_mu = [&](const Vec& z) -> Vec { return problem.lower + range.cwiseProduct(z); };
  Vec z = ((mu_init - problem.lower).cwiseQuotient(range))
              .cwiseMax(problem.bound_push)
              .cwiseMin(1.0 - problem.bound_push);

  int iter = 0;
  auto with_context = [&](auto&& fn) {
    try {
      return fn();
    } catch (const Error& err) {
      throw Error(err.code(), "iteration " + std::to_string(iter) + ": " + strip_code(err));
    }
  };

  Evaluation cur = with_context([&] { return ev.evaluate(to_mu(z), true, true); });
  ev.accept(cur);

  // Objective scaled to O(1) at the start; constraints are already relative.
  const Vec g0 = cur.grad_objective.cwiseProduct(range);
  double fscale = std::max(std::abs(cur.objective), g0.cwiseAbs().maxCoeff());
  if (!(fscale > 0.0)) fscale = 1.0;

  auto scaled_grad = [&](const Evaluation& e) -> Vec { return e.grad_objective.cwiseProduct(range) / fscale; };
  auto scaled_jac = [&](const Evaluation& e) -> Mat { return e.jacobian * range.asDiagonal(); };

  Mat B = Mat::Identity(n, n);
  double penalty = 0.0;
  const double ctol = problem.tol.constraint_tol;
  auto record = [&](double step, double alpha, double merit) {
    TraceRow row;
    row.iter = iter;
    row.mu = cur.mu;
    row.objective = cur.objective;
    row.constraints = cur.constraints;
    row.max_violation = cur.max_violation();
    row.epsilon = cur.epsilon;
    row.order = cur.order;
    row.mac = cur.mac;
    const Vec gz = scaled_grad(cur);
    row.grad_norm = gz.size() ? gz.cwiseAbs().maxCoeff() : 0.0;
    row.stationarity = stationarity(gz, scaled_jac(cur), z, nullptr);
    row.step_norm = step;
    row.alpha = alpha;
    row.merit = merit;
    res.trace.push_back(row);
    return row.stationarity;
  };
  res.stationarity = record(0.0, 0.0, cur.objective / fscale + penalty * cur.constraints.lpNorm<1>());

  for (iter = 1; iter <= problem.tol.max_iter; ++iter) {
    const Vec gz = scaled_grad(cur);
    const Mat Az = scaled_jac(cur);
    const QpResult qp = solve_qp(B, gz, Az, -cur.constraints, -z, Vec::Ones(n) - z);
    const Vec& d = qp.d;
    const double step = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
    if (cur.max_violation() <= ctol && (step <= problem.tol.step_tol || res.stationarity <= 1e-6)) {
      res.converged = true;
      --iter;
      break;
    }

    const double nu_norm = qp.nu.size() ? qp.nu.cwiseAbs().maxCoeff() : 0.0;
    penalty = std::max(penalty, 1.1 * nu_norm + 1e-8);
    auto merit = [&](const Evaluation& e) { return e.objective / fscale + penalty * e.constraints.lpNorm<1>(); };
    const double m0 = merit(cur);
    const double lin = (cur.constraints + Az * d).lpNorm<1>();
    double slope = gz.dot(d) + penalty * (lin - cur.constraints.lpNorm<1>());
    if (slope >= 0.0) slope = -1e-12;

    double alpha = 1.0;
    std::optional<Evaluation> trial;
    Vec z_new;
    while (alpha >= 1e-6) {
      z_new = (z + alpha * d).cwiseMax(0.0).cwiseMin(1.0);
      try {
        Evaluation e = ev.evaluate(to_mu(z_new), false, alpha == 1.0);
        if (merit(e) <= m0 + 1e-4 * alpha * slope) {
          trial = std::move(e);
          break;
        }
      } catch (const Error& err) {
        // An unreachable or untrackable trial point is treated as a rejected step.
        const ErrorCode c = err.code();
        if (c != ErrorCode::TrackingLost && c != ErrorCode::AmplitudeUnreachable && c != ErrorCode::LightDamping &&
            c != ErrorCode::DegenerateMode && c != ErrorCode::OuterResonance &&
            c != ErrorCode::DegenerateParametrization && c != ErrorCode::TurningPoint)
          throw Error(c, "iteration " + std::to_string(iter) + ": " + strip_code(err));
      }
      alpha *= 0.5;
    }
    if (!trial) {
      if (!B.isIdentity()) {
        B = Mat::Identity(n, n);
        continue;
      }
      res.message = "line search failed";
      --iter;
      break;
    }

    const int order_before = ev.order();
    Evaluation next = *trial;
    const bool grow =
        order_policy(next.epsilon, problem.tol.eps_tol, next.order, problem.tol.max_order) != next.order;
    if (grow || !next.has_gradient)
      next = with_context([&] { return ev.evaluate(to_mu(z_new), true, true); });

    // Damped BFGS on the Lagrangian gradient; skipped when the order changed.
    const Vec s = z_new - z;
    if (ev.order() == order_before && s.norm() > 1e-14) {
      const Vec y = (scaled_grad(next) + scaled_jac(next).transpose() * qp.nu) - (gz + Az.transpose() * qp.nu);
      const Vec Bs = B * s;
      const double sBs = s.dot(Bs);
      double sy = s.dot(y);
      Vec yd = y;
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        yd = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(yd);
      }
      if (sy > 1e-16 && sBs > 1e-16) B += yd * yd.transpose() / sy - Bs * Bs.transpose() / sBs;
    }

    z = z_new;
    cur = std::move(next);
    ev.accept(cur);
    res.stationarity = record(alpha * step, alpha, merit(cur));
  }
  if (iter > problem.tol.max_iter) {
    iter = problem.tol.max_iter;
    if (res.message.empty()) res.message = "maximum iterations reached";
  }
  if (!res.converged && cur.max_violation() <= ctol && res.stationarity <= 1e-6) res.converged = true;
  if (res.converged) res.message = "converged";
  if (cur.epsilon > problem.tol.eps_tol)
    res.warnings.push_back("invariance error " + std::to_string(cur.epsilon) + " above epsTol at maxOrder " +
                           std::to_string(cur.order));
  res.iterations = iter;
  res.mu = cur.mu;
  res.final = cur;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

namespace {

using nlohmann::json;

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      fail(ErrorCode::InvalidConfig, path + "." + it.key() + ": unknown key");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(ErrorCode::InvalidConfig, path + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(ErrorCode::InvalidConfig, path + ": expected an integer");
  return j.get<int>();
}

FrequencyTarget frequency(const json& j, const std::string& path) {
  FrequencyTarget t;
  if (j.is_number()) {
    t.value = j.get<double>();
  } else {
    allow_keys(j, path, {"factor_of_omega0"});
    if (!j.contains("factor_of_omega0")) fail(ErrorCode::InvalidConfig, path + ": expected a number or factor_of_omega0");
    t.value = number(j["factor_of_omega0"], path + ".factor_of_omega0");
    t.factor_of_omega0 = true;
  }
  if (!(t.value > 0.0)) fail(ErrorCode::InvalidConfig, path + ": target frequency must be positive");
  return t;
}

}  // namespace

OptProblem problem_from_json(const std::string& text, std::shared_ptr<const ModelFactory> factory,
                             const std::string& path) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
  allow_keys(j, path, {"objective", "constraints", "bounds", "initial", "tolerances", "gradient", "mode",
                       "macThreshold", "thetaSamples", "boundPush"});
  OptProblem p;
  p.factory = factory;
  const auto names = factory->design_names();
  const int n = static_cast<int>(names.size());
  auto var_index = [&](const json& v, const std::string& where) {
    if (!v.is_string()) fail(ErrorCode::InvalidConfig, where + ": expected a variable name");
    const auto it = std::find(names.begin(), names.end(), v.get<std::string>());
    if (it == names.end()) fail(ErrorCode::InvalidConfig, where + ": unknown design variable '" + v.get<std::string>() + "'");
    return static_cast<int>(it - names.begin());
  };

  if (j.contains("objective")) {
    const json& o = j["objective"];
    if (!o.is_array()) fail(ErrorCode::InvalidConfig, path + ".objective: expected an array of terms");
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::string tp = path + ".objective[" + std::to_string(i) + "]";
      allow_keys(o[i], tp, {"coef", "vars", "response", "dof", "x"});
      ObjectiveTerm t;
      if (o[i].contains("coef")) t.coef = number(o[i]["coef"], tp + ".coef");
      if (o[i].contains("vars")) {
        if (!o[i]["vars"].is_array()) fail(ErrorCode::InvalidConfig, tp + ".vars: expected an array");
        for (std::size_t v = 0; v < o[i]["vars"].size(); ++v)
          t.vars.push_back(var_index(o[i]["vars"][v], tp + ".vars[" + std::to_string(v) + "]"));
      }
      if (o[i].contains("response")) {
        const json& r = o[i]["response"];
        const std::string s = r.is_string() ? r.get<std::string>() : "";
        if (s == "omega0") t.response = Response::Omega0;
        else if (s == "backbone") t.response = Response::Backbone;
        else fail(ErrorCode::InvalidConfig, tp + ".response: expected \"omega0\" or \"backbone\"");
      }
      if (o[i].contains("dof")) t.dof = integer(o[i]["dof"], tp + ".dof");
      if (o[i].contains("x")) t.x = number(o[i]["x"], tp + ".x");
      if (t.response == Response::Backbone && !(t.x > 0.0))
        fail(ErrorCode::InvalidConfig, tp + ".x: backbone response needs a positive amplitude");
      p.objective.push_back(t);
    }
  }

  if (j.contains("constraints")) {
    const json& c = j["constraints"];
    if (!c.is_array()) fail(ErrorCode::InvalidConfig, path + ".constraints: expected an array");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string cp = path + ".constraints[" + std::to_string(i) + "]";
      if (!c[i].is_object() || !c[i].contains("type") || !c[i]["type"].is_string())
        fail(ErrorCode::InvalidConfig, cp + ".type: missing constraint type");
      const std::string type = c[i]["type"];
      if (type == "backbone") {
        allow_keys(c[i], cp, {"type", "dof", "x", "omega"});
        BackboneConstraint b;
        if (c[i].contains("dof")) b.dof = integer(c[i]["dof"], cp + ".dof");
        if (!c[i].contains("x") || !c[i].contains("omega"))
          fail(ErrorCode::InvalidConfig, cp + ": backbone constraint needs x and omega");
        b.x = number(c[i]["x"], cp + ".x");
        if (!(b.x > 0.0)) fail(ErrorCode::InvalidConfig, cp + ".x: amplitude must be positive");
        b.omega = frequency(c[i]["omega"], cp + ".omega");
        p.backbone.push_back(b);
      } else if (type == "eigfreq") {
        allow_keys(c[i], cp, {"type", "mode", "omega"});
        EigfreqConstraint e;
        if (c[i].contains("mode")) e.mode = integer(c[i]["mode"], cp + ".mode");
        if (!c[i].contains("omega")) fail(ErrorCode::InvalidConfig, cp + ": eigfreq constraint needs omega");
        e.omega = frequency(c[i]["omega"], cp + ".omega");
        p.eigfreq.push_back(e);
      } else {
        fail(ErrorCode::InvalidConfig, cp + ".type: expected \"backbone\" or \"eigfreq\"");
      }
    }
  }

  if (!j.contains("bounds")) fail(ErrorCode::InvalidConfig, path + ".bounds: required");
  {
    const json& b = j["bounds"];
    if (!b.is_object()) fail(ErrorCode::InvalidConfig, path + ".bounds: expected an object");
    p.lower = Vec::Constant(n, std::numeric_limits<double>::quiet_NaN());
    p.upper = p.lower;
    for (auto it = b.begin(); it != b.end(); ++it) {
      const std::string bp = path + ".bounds." + it.key();
      const int v = var_index(json(it.key()), bp);
      if (!it->is_array() || it->size() != 2) fail(ErrorCode::InvalidConfig, bp + ": expected [lower, upper]");
      p.lower[v] = number((*it)[0], bp + "[0]");
      p.upper[v] = number((*it)[1], bp + "[1]");
    }
    for (int v = 0; v < n; ++v)
      if (std::isnan(p.lower[v])) fail(ErrorCode::InvalidConfig, path + ".bounds." + names[v] + ": missing");
  }

  if (j.contains("initial")) {
    const json& b = j["initial"];
    if (!b.is_object()) fail(ErrorCode::InvalidConfig, path + ".initial: expected an object");
    p.initial = factory->design_values();
    for (auto it = b.begin(); it != b.end(); ++it)
      p.initial[var_index(json(it.key()), path + ".initial." + it.key())] =
          number(*it, path + ".initial." + it.key());
  }

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    const std::string tp = path + ".tolerances";
    allow_keys(t, tp, {"constraintTol", "stepTol", "epsTol", "minOrder", "maxOrder", "maxIter"});
    if (t.contains("constraintTol")) p.tol.constraint_tol = number(t["constraintTol"], tp + ".constraintTol");
    if (t.contains("stepTol")) p.tol.step_tol = number(t["stepTol"], tp + ".stepTol");
    if (t.contains("epsTol")) p.tol.eps_tol = number(t["epsTol"], tp + ".epsTol");
    if (t.contains("minOrder")) p.tol.min_order = integer(t["minOrder"], tp + ".minOrder");
    if (t.contains("maxOrder")) p.tol.max_order = integer(t["maxOrder"], tp + ".maxOrder");
    if (t.contains("maxIter")) p.tol.max_iter = integer(t["maxIter"], tp + ".maxIter");
  }
  if (j.contains("gradient")) {
    const std::string g = j["gradient"].is_string() ? j["gradient"].get<std::string>() : "";
    if (g == "adjoint") p.gradient = GradientMethod::Adjoint;
    else if (g == "direct") p.gradient = GradientMethod::Direct;
    else fail(ErrorCode::InvalidConfig, path + ".gradient: expected \"adjoint\" or \"direct\"");
  }
  if (j.contains("mode")) p.mode = integer(j["mode"], path + ".mode");
  if (j.contains("macThreshold")) p.mac_threshold = number(j["macThreshold"], path + ".macThreshold");
  if (j.contains("thetaSamples")) p.theta_samples = integer(j["thetaSamples"], path + ".thetaSamples");
  if (j.contains("boundPush")) p.bound_push = number(j["boundPush"], path + ".boundPush");
  p.validate();
  return p;
}

std::string trace_to_csv(const OptResult& r) {
  std::string out = "iter,objective,max_violation,epsilon,order,mac,grad_norm,stationarity,step,alpha,merit";
  for (const auto& nm : r.names) out += ",mu_" + nm;
  if (!r.trace.empty())
    for (int j = 0; j < r.trace.front().constraints.size(); ++j) out += ",c" + std::to_string(j);
  out += "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out += buf;
  };
  for (const auto& row : r.trace) {
    out += std::to_string(row.iter);
    num(row.objective);
    num(row.max_violation);
    num(row.epsilon);
    out += "," + std::to_string(row.order);
    num(row.mac);
    num(row.grad_norm);
    num(row.stationarity);
    num(row.step_norm);
    num(row.alpha);
    num(row.merit);
    for (int i = 0; i < row.mu.size(); ++i) num(row.mu[i]);
    for (int i = 0; i < row.constraints.size(); ++i) num(row.constraints[i]);
    out += "\n";
  }
  return out;
}

std::string result_to_json(const OptResult& r, const OptProblem& problem) {
  json j;
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["iterations"] = r.iterations;
  j["seconds"] = r.seconds;
  j["objective"] = r.final.objective;
  j["omega0"] = r.final.omega0;
  j["order"] = r.final.order;
  j["epsilon"] = r.final.epsilon;
  j["mac"] = r.final.mac;
  j["stationarity"] = r.stationarity;
  j["gradient"] = problem.gradient == GradientMethod::Adjoint ? "adjoint" : "direct";
  j["maxViolation"] = r.final.max_violation();
  j["warnings"] = r.warnings;
  json mu = json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) mu[r.names[i]] = r.mu[i];
  j["mu"] = mu;
  json cons = json::array();
  for (int c = 0; c < r.final.constraints.size(); ++c)
    cons.push_back({{"omega", r.final.omega[c]}, {"target", r.final.target[c]}, {"relative", r.final.constraints[c]}});
  j["constraints"] = cons;
  return j.dump(2);
}

}  // namespace ssmopt
