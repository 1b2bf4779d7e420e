#include "ssmopt/ssm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "ssmopt/error.hpp"

namespace ssmopt {

namespace {

std::string label(const MultiIndex& m) {
  std::ostringstream os;
  os << "{" << m.m1 << "," << m.m2 << "}";
  return os.str();
}

// Eigen's rcond estimate is unreliable for an exactly zero pivot, so the pivot
// spread of U is checked as well.
bool well_conditioned(const Eigen::PartialPivLU<CMat>& lu, double tol) {
  const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
  if (!piv.allFinite() || !(piv.minCoeff() >= tol * piv.maxCoeff())) return false;
  return lu.rcond() >= tol;
}

void ensure_capacity(SsmExpansion& exp, int order) {
  const int sz = flat_size(order);
  if (static_cast<int>(exp.data.size()) < sz) exp.data.resize(sz);
}

CVec force_term(const MechModel& model, const SsmExpansion& exp, const MultiIndex& m) {
  CVec f = CVec::Zero(model.n);
  if (!model.T2.empty()) {
    for (int u1 = 0; u1 <= m.m1; ++u1)
      for (int u2 = 0; u2 <= m.m2; ++u2) {
        const MultiIndex u{u1, u2}, k{m.m1 - u1, m.m2 - u2};
        if (u.order() < 1 || k.order() < 1) continue;
        f += model.T2.contract(exp.at(u).w, exp.at(k).w);
      }
  }
  if (!model.T3.empty()) {
    for (int u1 = 0; u1 <= m.m1; ++u1)
      for (int u2 = 0; u2 <= m.m2; ++u2)
        for (int k1 = 0; k1 <= m.m1 - u1; ++k1)
          for (int k2 = 0; k2 <= m.m2 - u2; ++k2) {
            const MultiIndex u{u1, u2}, k{k1, k2}, l{m.m1 - u1 - k1, m.m2 - u2 - k2};
            if (u.order() < 1 || k.order() < 1 || l.order() < 1) continue;
            f += model.T3.contract(exp.at(u).w, exp.at(k).w, exp.at(l).w);
          }
  }
  return f;
}

void lower_order_terms(const SsmExpansion& exp, const MultiIndex& m, CVec& V, CVec& Vdot) {
  const int n = static_cast<int>(exp.master.phi.size());
  V = CVec::Zero(n);
  Vdot = CVec::Zero(n);
  const int om = m.order();
  for (int ko = 2; ko < om; ++ko) {
    for (const auto& k : enumerate_all(ko)) {
      const IndexData& kd = exp.at(k);
      for (int j = 1; j <= 2; ++j) {
        const Complex r = kd.R(j);
        if (r == Complex(0.0)) continue;
        const MultiIndex u{m.m1 - k.m1 + (j == 1), m.m2 - k.m2 + (j == 2)};
        if (u.m1 < 0 || u.m2 < 0) continue;
        const int uj = j == 1 ? u.m1 : u.m2;
        if (uj == 0) continue;
        const IndexData& ud = exp.at(u);
        V += ud.w * (double(uj) * r);
        Vdot += ud.wdot * (double(uj) * r);
      }
    }
  }
}

void fill_conjugate(SsmExpansion& exp, const MultiIndex& m) {
  const IndexData& s = exp.at(m);
  IndexData& d = exp.at(m.symmetric());
  d.m = m.symmetric();
  d.present = true;
  d.Lambda = std::conj(s.Lambda);
  d.w = s.w.conjugate();
  d.wdot = s.wdot.conjugate();
  d.R1 = std::conj(s.R2);
  d.R2 = std::conj(s.R1);
  d.res = s.res == Resonance::R1 ? Resonance::R2 : (s.res == Resonance::R2 ? Resonance::R1 : Resonance::None);
  d.f = s.f.conjugate();
  d.V = s.V.conjugate();
  d.Vdot = s.Vdot.conjugate();
  d.Cm = s.Cm.conjugate();
  d.D = s.D.conjugate();
  d.den = std::conj(s.den);
  d.border = s.border;
  d.lu.reset();
}

CMat cohomological_operator(const MechModel& model, const Mat& C, Complex Lambda) {
  return model.K.cast<Complex>() + Lambda * C.cast<Complex>() + (Lambda * Lambda) * model.M.cast<Complex>();
}

}  // namespace

const IndexData& SsmExpansion::at(const MultiIndex& m) const {
  if (m.m1 < 0 || m.m2 < 0 || flat_index(m) >= static_cast<int>(data.size()))
    fail(ErrorCode::InvalidArgument, "multi-index " + label(m) + " outside expansion");
  return data[flat_index(m)];
}

IndexData& SsmExpansion::at(const MultiIndex& m) {
  if (m.m1 < 0 || m.m2 < 0 || flat_index(m) >= static_cast<int>(data.size()))
    fail(ErrorCode::InvalidArgument, "multi-index " + label(m) + " outside expansion");
  return data[flat_index(m)];
}

SsmExpansion leading_order(const MechModel& model, const MasterPair& master, bool full_set) {
  SsmExpansion exp;
  exp.order = 1;
  exp.master = master;
  exp.C = assemble_damping(model);
  exp.full_set = full_set;
  ensure_capacity(exp, 1);
  const CVec phi = master.phi.cast<Complex>();
  const CVec zero = CVec::Zero(model.n);
  for (int j = 1; j <= 2; ++j) {
    const MultiIndex m = j == 1 ? MultiIndex{1, 0} : MultiIndex{0, 1};
    IndexData& d = exp.at(m);
    d.m = m;
    d.present = true;
    d.Lambda = exp.lambda(j);
    d.w = phi;
    d.wdot = exp.lambda(j) * phi;
    d.R1 = j == 1 ? master.lambda : Complex(0.0);
    d.R2 = j == 2 ? master.lambda_bar : Complex(0.0);
    d.res = j == 1 ? Resonance::R1 : Resonance::R2;
    d.f = d.V = d.Vdot = d.Cm = zero;
  }
  return exp;
}

void order_step(const MechModel& model, SsmExpansion& exp, const MultiIndex& m, const SsmOptions& opts) {
  const int om = m.order();
  if (om < 2) fail(ErrorCode::InvalidArgument, "order_step requires order >= 2");
  if (!exp.full_set && !m.canonical())
    fail(ErrorCode::InvalidArgument, "canonical expansion only solves indices with m1 >= m2");
  ensure_capacity(exp, om);
  const int n = model.n;
  const MasterPair& mp = exp.master;
  const CVec phi = mp.phi.cast<Complex>();
  const CMat Mc = model.M.cast<Complex>();
  const CMat Cc = exp.C.cast<Complex>();

  IndexData d;
  d.m = m;
  d.present = true;
  d.Lambda = double(m.m1) * mp.lambda + double(m.m2) * mp.lambda_bar;
  d.f = force_term(model, exp, m);
  lower_order_terms(exp, m, d.V, d.Vdot);
  d.Cm = -Mc * d.Vdot - (d.Lambda * Mc + Cc) * d.V - d.f;
  d.res = near_resonant(m);
  d.R1 = d.R2 = Complex(0.0);

  const CMat L = cohomological_operator(model, exp.C, d.Lambda);
  CVec h = d.Cm;
  if (d.res != Resonance::None) {
    const int j = d.res == Resonance::R1 ? 1 : 2;
    d.den = d.Lambda + exp.lambda(j) + model.alpha + model.beta * mp.omega * mp.omega;
    if (std::abs(d.den) < 1e-10 * std::max(1.0, mp.omega))
      fail(ErrorCode::DegenerateParametrization, "vanishing reduced-dynamics denominator at " + label(m));
    const Complex r = (phi.transpose() * d.Cm).value() / d.den;
    (j == 1 ? d.R1 : d.R2) = r;
    d.D = -((d.Lambda + exp.lambda(j)) * Mc + Cc) * phi;
    h += d.D * r;

    // Bordered with phi^T M w = 0, which the damped solution satisfies exactly
    // and which removes the kernel of L in the undamped limit.
    const CVec Mphi = Mc * phi;
    const double lscale = std::max(L.cwiseAbs().maxCoeff(), model.K.cwiseAbs().maxCoeff() +
                                                                std::norm(d.Lambda) * model.M.cwiseAbs().maxCoeff());
    d.border = lscale / Mphi.cwiseAbs().maxCoeff();
    CMat Bm(n + 1, n + 1);
    Bm.topLeftCorner(n, n) = L;
    Bm.topRightCorner(n, 1) = d.border * Mphi;
    Bm.bottomLeftCorner(1, n) = d.border * Mphi.transpose();
    Bm(n, n) = 0.0;
    d.lu = std::make_shared<Eigen::PartialPivLU<CMat>>(Bm);
    if (!well_conditioned(*d.lu, opts.outer_rcond))
      fail(ErrorCode::OuterResonance, "singular bordered cohomological system at " + label(m));
    CVec rhs(n + 1);
    rhs.head(n) = h;
    rhs[n] = 0.0;
    d.w = d.lu->solve(rhs).head(n);
  } else {
    d.lu = std::make_shared<Eigen::PartialPivLU<CMat>>(L);
    if (!well_conditioned(*d.lu, opts.outer_rcond))
      fail(ErrorCode::OuterResonance, "cohomological operator singular at " + label(m) +
                                          " (Lambda_m close to an eigenvalue of a non-master mode)");
    d.w = d.lu->solve(h);
  }
  d.wdot = d.Lambda * d.w + (d.R1 + d.R2) * phi + d.V;

  exp.at(m) = std::move(d);
  if (!exp.full_set && !m.self_symmetric()) fill_conjugate(exp, m);
}

void extend_ssm(const MechModel& model, SsmExpansion& exp, int order, const SsmOptions& opts) {
  if (order < 3 || order % 2 == 0) fail(ErrorCode::InvalidArgument, "expansion order must be odd and >= 3");
  if (order < exp.order) fail(ErrorCode::InvalidArgument, "expansion order cannot decrease");
  ensure_capacity(exp, order);
  for (int o = exp.order + 1; o <= order; ++o) {
    if (exp.full_set) {
      for (const auto& m : enumerate_all(o)) order_step(model, exp, m, opts);
    } else {
      for (const auto& m : enumerate(o).indices) order_step(model, exp, m, opts);
    }
    exp.order = o;
  }
}

SsmExpansion compute_ssm(const MechModel& model, const MasterPair& master, int order, const SsmOptions& opts) {
  if (order < 3 || order % 2 == 0) fail(ErrorCode::InvalidArgument, "expansion order must be odd and >= 3");
  SsmExpansion exp = leading_order(model, master, opts.full_set);
  extend_ssm(model, exp, order, opts);
  return exp;
}

double cohomological_residual(const MechModel& model, const SsmExpansion& exp, const MultiIndex& m) {
  const IndexData& d = exp.at(m);
  CVec h = d.Cm;
  if (d.D.size() > 0) h += d.D * (d.R1 + d.R2);
  const CMat L = cohomological_operator(model, exp.C, d.Lambda);
  const double hn = h.norm();
  const double r = (L * d.w - h).norm();
  return hn > 0.0 ? r / hn : r;
}

ManifoldPoint evaluate_manifold(const SsmExpansion& exp, Complex p1, Complex p2) {
  const int n = static_cast<int>(exp.master.phi.size());
  ManifoldPoint pt;
  pt.w = CVec::Zero(n);
  pt.wdot = CVec::Zero(n);
  pt.a = CVec::Zero(n);
  pt.b = CVec::Zero(n);
  Complex r1(0.0), r2(0.0);
  for (int o = 1; o <= exp.order; ++o)
    for (const auto& m : enumerate_all(o)) {
      const IndexData& d = exp.at(m);
      const Complex pm = monomial(p1, p2, m);
      pt.w += d.w * pm;
      pt.wdot += d.wdot * pm;
      r1 += d.R1 * pm;
      r2 += d.R2 * pm;
    }
  for (int o = 1; o <= exp.order; ++o)
    for (const auto& m : enumerate_all(o)) {
      const IndexData& d = exp.at(m);
      Complex g(0.0);
      if (m.m1 > 0) g += double(m.m1) * monomial(p1, p2, {m.m1 - 1, m.m2}) * r1;
      if (m.m2 > 0) g += double(m.m2) * monomial(p1, p2, {m.m1, m.m2 - 1}) * r2;
      pt.a += d.w * g;
      pt.b += d.wdot * g;
    }
  return pt;
}

ErrorMeasure invariance_residual(const MechModel& model, const SsmExpansion& exp, double rho, int theta_samples) {
  if (!(rho > 0.0)) fail(ErrorCode::InvalidArgument, "rho must be positive");
  if (theta_samples < 1) fail(ErrorCode::InvalidArgument, "theta_samples must be positive");
  const int n = model.n;
  const CMat Mc = model.M.cast<Complex>();
  const CMat Kc = model.K.cast<Complex>();
  const CMat Cc = exp.C.cast<Complex>();
  ErrorMeasure em;
  em.rho_max = rho;
  em.theta_samples = theta_samples;
  for (int k = 1; k <= theta_samples; ++k) {
    const double th = 2.0 * std::numbers::pi * k / theta_samples;
    const Complex p1 = std::polar(rho, th);
    const ManifoldPoint pt = evaluate_manifold(exp, p1, std::conj(p1));
    const CVec f = nonlinear_force(model, pt.w);
    CVec num(2 * n), den(2 * n);
    num.head(n) = Cc * pt.a + Mc * pt.b + Kc * pt.w + f;
    num.tail(n) = Mc * (pt.a - pt.wdot);
    den.head(n) = -Kc * pt.w - f;
    den.tail(n) = Mc * pt.wdot;
    const double dn = den.norm();
    if (dn == 0.0) fail(ErrorCode::InvalidArgument, "degenerate evaluation point for the invariance residual");
    em.epsilon = std::max(em.epsilon, num.norm() / dn);
  }
  return em;
}

AdaptResult adapt_order(const MechModel& model, SsmExpansion exp, double tol, double rho, int max_order,
                        int theta_samples) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  AdaptResult r;
  for (;;) {
    r.error = invariance_residual(model, exp, rho, theta_samples);
    r.history.emplace_back(exp.order, r.error.epsilon);
    if (r.error.epsilon <= tol) break;
    if (exp.order + 2 > max_order) {
      r.converged = false;
      break;
    }
    extend_ssm(model, exp, exp.order + 2);
  }
  r.expansion = std::move(exp);
  return r;
}

AdaptResult adapt_order(const MechModel& model, const MasterPair& master, double tol, double rho, int min_order,
                        int max_order, int theta_samples) {
  if (max_order < min_order) fail(ErrorCode::InvalidArgument, "max order below min order");
  return adapt_order(model, compute_ssm(model, master, min_order), tol, rho, max_order, theta_samples);
}

std::string expansion_to_json(const SsmExpansion& exp) {
  using nlohmann::json;
  auto re = [](const CVec& v) {
    std::vector<double> out(v.size());
    for (int i = 0; i < v.size(); ++i) out[i] = v[i].real();
    return out;
  };
  auto im = [](const CVec& v) {
    std::vector<double> out(v.size());
    for (int i = 0; i < v.size(); ++i) out[i] = v[i].imag();
    return out;
  };
  json j;
  j["order"] = exp.order;
  j["omega"] = exp.master.omega;
  j["xi"] = exp.master.xi;
  j["lambda"] = {exp.master.lambda.real(), exp.master.lambda.imag()};
  j["mode"] = exp.master.mode_index;
  j["phi"] = std::vector<double>(exp.master.phi.data(), exp.master.phi.data() + exp.master.phi.size());
  json coeffs = json::array();
  for (int o = 1; o <= exp.order; ++o)
    for (const auto& m : enumerate_all(o)) {
      const IndexData& d = exp.at(m);
      coeffs.push_back({{"m1", m.m1},
                        {"m2", m.m2},
                        {"w_re", re(d.w)},
                        {"w_im", im(d.w)},
                        {"wdot_re", re(d.wdot)},
                        {"wdot_im", im(d.wdot)},
                        {"R1", {d.R1.real(), d.R1.imag()}},
                        {"R2", {d.R2.real(), d.R2.imag()}}});
    }
  j["coefficients"] = coeffs;
  return j.dump(2);
}

}  // namespace ssmopt
