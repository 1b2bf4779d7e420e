#include "ssmopt/sens_direct.hpp"

#include <chrono>
#include <cmath>

#include "ssmopt/error.hpp"

namespace ssmopt {

EigenSensitivity::EigenSensitivity(const MechModel& model, const MasterPair& master)
    : model_(model), master_(master) {
  const int n = model.n;
  const double w = master.omega;
  const Vec b = -2.0 * w * (model.M * master.phi);
  const Mat A = model.K - w * w * model.M;
  scale_ = std::max(A.cwiseAbs().maxCoeff(), model.K.cwiseAbs().maxCoeff()) / b.cwiseAbs().maxCoeff();
  Mat E = Mat::Zero(n + 1, n + 1);
  E.topLeftCorner(n, n) = A;
  E.topRightCorner(n, 1) = scale_ * b;
  E.bottomLeftCorner(1, n) = scale_ * b.transpose();
  lu_.compute(E);
  if (!(lu_.rcond() >= 1e-13)) fail(ErrorCode::DegenerateMode, "eigenvalue derivative system is singular (repeated eigenvalue)");
}

EigenDerivative EigenSensitivity::solve(const SpMat& dM, const SpMat& dK) const {
  const int n = model_.n;
  const double w = master_.omega;
  const Vec& phi = master_.phi;
  const Vec dMphi = dM * phi;
  Vec rhs(n + 1);
  rhs.head(n) = w * w * dMphi - dK * phi;
  rhs[n] = scale_ * w * phi.dot(dMphi);
  const Vec y = lu_.solve(rhs);
  return {y.head(n), scale_ * y[n]};
}

Vec EigenSensitivity::solve_raw(const Vec& rhs) const {
  const int n = model_.n;
  Vec r = rhs;
  r[n] *= scale_;
  Vec y = lu_.solve(r);
  y[n] *= scale_;
  return y;
}

std::vector<EigenDerivative> eig_derivatives(const MechModel& model, const MasterPair& master) {
  EigenSensitivity es(model, master);
  std::vector<EigenDerivative> out;
  for (const auto& p : model.params) out.push_back(es.solve(p.dM, p.dK));
  return out;
}

DirectDerivatives chain_derivatives(const MechModel& model, const SsmExpansion& exp, const TargetState& state,
                                    const AmplitudeTarget& target, int param, const EigenSensitivity& eig) {
  if (param < 0 || param >= model.param_count()) fail(ErrorCode::InvalidArgument, "parameter index out of range");
  const ParamDerivative& pd = model.params[param];
  const int n = model.n;
  const MasterPair& mp = exp.master;
  const double w = mp.omega;
  const CVec phi = mp.phi.cast<Complex>();

  const Mat dCd = damping_derivative(model, pd);
  const CMat Mc = model.M.cast<Complex>();
  const CMat Cc = exp.C.cast<Complex>();
  const CMat Kc = model.K.cast<Complex>();
  const CMat dMc = Mat(pd.dM).cast<Complex>();
  const CMat dKc = Mat(pd.dK).cast<Complex>();
  const CMat dCc = dCd.cast<Complex>();

  DirectDerivatives out;
  out.param = pd.name;
  const EigenDerivative ed = eig.solve(pd.dM, pd.dK);
  out.dPhi = ed.dphi;
  out.dOmega0 = ed.domega;
  const double xi = mp.xi;
  const double xip = (model.beta * w * w - model.alpha) / (2.0 * w * w);
  const double sq = std::sqrt(1.0 - xi * xi);
  const Complex dl_dw(-xi - w * xip, sq - w * xi * xip / sq);
  out.dXi = xip * ed.domega;
  out.dLambda = dl_dw * ed.domega;
  const Complex dlam[3] = {Complex(0.0), out.dLambda, std::conj(out.dLambda)};
  const CVec dphi = ed.dphi.cast<Complex>();

  auto& D = out.coeffs;
  D.assign(exp.data.size(), IndexDerivative{});
  auto dat = [&](const MultiIndex& m) -> IndexDerivative& { return D[flat_index(m)]; };

  // Leading order.
  for (int j = 1; j <= 2; ++j) {
    const MultiIndex m = j == 1 ? MultiIndex{1, 0} : MultiIndex{0, 1};
    IndexDerivative& d = dat(m);
    d.dw = dphi;
    d.dwdot = dlam[j] * phi + exp.lambda(j) * dphi;
    d.dR1 = j == 1 ? dlam[1] : Complex(0.0);
    d.dR2 = j == 2 ? dlam[2] : Complex(0.0);
  }

  for (int o = 2; o <= exp.order; ++o) {
    const std::vector<MultiIndex> idx = exp.full_set ? enumerate_all(o) : enumerate(o).indices;
    for (const auto& m : idx) {
      const IndexData& pr = exp.at(m);
      IndexDerivative& d = dat(m);
      const Complex Lam = pr.Lambda;
      const Complex dLam = double(m.m1) * dlam[1] + double(m.m2) * dlam[2];

      // Nonlinear force.
      CVec df = CVec::Zero(n);
      if (!model.T2.empty() || !pd.dT2.empty()) {
        for (int u1 = 0; u1 <= m.m1; ++u1)
          for (int u2 = 0; u2 <= m.m2; ++u2) {
            const MultiIndex u{u1, u2}, k{m.m1 - u1, m.m2 - u2};
            if (u.order() < 1 || k.order() < 1) continue;
            const CVec& wu = exp.at(u).w;
            const CVec& wk = exp.at(k).w;
            if (!pd.dT2.empty()) df += pd.dT2.contract(wu, wk);
            if (!model.T2.empty()) df += 2.0 * model.T2.contract(dat(u).dw, wk);
          }
      }
      if (!model.T3.empty() || !pd.dT3.empty()) {
        for (int u1 = 0; u1 <= m.m1; ++u1)
          for (int u2 = 0; u2 <= m.m2; ++u2)
            for (int k1 = 0; k1 <= m.m1 - u1; ++k1)
              for (int k2 = 0; k2 <= m.m2 - u2; ++k2) {
                const MultiIndex u{u1, u2}, k{k1, k2}, l{m.m1 - u1 - k1, m.m2 - u2 - k2};
                if (u.order() < 1 || k.order() < 1 || l.order() < 1) continue;
                const CVec& wk = exp.at(k).w;
                const CVec& wl = exp.at(l).w;
                if (!pd.dT3.empty()) df += pd.dT3.contract(exp.at(u).w, wk, wl);
                if (!model.T3.empty()) df += 3.0 * model.T3.contract(dat(u).dw, wk, wl);
              }
      }

      // Lower-order reduced-dynamics terms.
      CVec dV = CVec::Zero(n), dVd = CVec::Zero(n);
      for (int ko = 2; ko < o; ++ko)
        for (const auto& k : enumerate_all(ko)) {
          const IndexData& kd = exp.at(k);
          const IndexDerivative& kdd = dat(k);
          for (int j = 1; j <= 2; ++j) {
            const Complex r = kd.R(j);
            if (r == Complex(0.0)) continue;
            const Complex dr = j == 1 ? kdd.dR1 : kdd.dR2;
            const MultiIndex u{m.m1 - k.m1 + (j == 1), m.m2 - k.m2 + (j == 2)};
            if (u.m1 < 0 || u.m2 < 0) continue;
            const int uj = j == 1 ? u.m1 : u.m2;
            if (uj == 0) continue;
            const IndexData& ud = exp.at(u);
            const IndexDerivative& udd = dat(u);
            dV += double(uj) * (udd.dw * r + ud.w * dr);
            dVd += double(uj) * (udd.dwdot * r + ud.wdot * dr);
          }
        }

      const CVec dCm = -dMc * pr.Vdot - Mc * dVd - (dLam * Mc + Lam * dMc + dCc) * pr.V -
                       (Lam * Mc + Cc) * dV - df;

      CVec dh = dCm;
      Complex dR(0.0);
      if (pr.res != Resonance::None) {
        const int j = pr.res == Resonance::R1 ? 1 : 2;
        const Complex R = pr.R(j);
        const Complex dden = dLam + dlam[j] + 2.0 * model.beta * w * ed.domega;
        dR = ((dphi.transpose() * pr.Cm).value() + (phi.transpose() * dCm).value()) / pr.den - R * dden / pr.den;
        const Complex lj = exp.lambda(j);
        const CVec dD = -((dLam + dlam[j]) * Mc + (Lam + lj) * dMc + dCc) * phi - ((Lam + lj) * Mc + Cc) * dphi;
        dh += dD * R + pr.D * dR;
        (j == 1 ? d.dR1 : d.dR2) = dR;
        (j == 1 ? d.dR2 : d.dR1) = Complex(0.0);
      } else {
        d.dR1 = d.dR2 = Complex(0.0);
      }
      const CVec dLw = dKc * pr.w + dLam * (Cc * pr.w) + Lam * (dCc * pr.w) + (2.0 * Lam * dLam) * (Mc * pr.w) +
                       (Lam * Lam) * (dMc * pr.w);
      if (pr.border > 0.0) {
        CVec rhs(n + 1);
        rhs.head(n) = dh - dLw;
        rhs[n] = -pr.border * ((dMc * phi + Mc * dphi).transpose() * pr.w).value();
        d.dw = pr.lu->solve(rhs).head(n);
      } else {
        d.dw = pr.lu->solve(dh - dLw);
      }
      d.dwdot = dLam * pr.w + Lam * d.dw + (d.dR1 + d.dR2) * phi + (pr.R1 + pr.R2) * dphi + dV;

      if (!exp.full_set && !m.self_symmetric()) {
        IndexDerivative& s = dat(m.symmetric());
        s.dw = d.dw.conjugate();
        s.dwdot = d.dwdot.conjugate();
        s.dR1 = std::conj(d.dR2);
        s.dR2 = std::conj(d.dR1);
      }
    }
  }

  // Amplitude held fixed: (dx/drho) drho + (dx/dw) dw = 0.
  const int N = target.theta_samples;
  const double x = std::sqrt(state.x_samples.squaredNorm() / N);
  double dxw = 0.0, s_max = 0.0, s_imag = 0.0;
  for (int k = 0; k < N; ++k) {
    Complex s(0.0);
    double rp = 1.0;
    for (int o = 1; o <= exp.order; ++o) {
      rp *= state.rho;
      for (const auto& m : enumerate_all(o)) {
        const Complex pm = rp * std::pow(state.phase[k], m.m1 - m.m2);
        s += D[flat_index(m)].dw[target.dof] * pm;
      }
    }
    dxw += state.x_samples[k] * s.real();
    s_max = std::max(s_max, std::abs(s));
    s_imag = std::max(s_imag, std::abs(s.imag()));
  }
  out.imag_residue = std::max(out.imag_residue, s_imag / std::max(s_max, 1e-300));
  dxw /= N * x;
  if (state.dx_drho == 0.0) fail(ErrorCode::TurningPoint, "dx/drho vanishes at the target amplitude");
  out.dRho = -dxw / state.dx_drho;

  const Complex half_i(0.0, 0.5);
  Complex dO = half_i * (dlam[2] - dlam[1]);
  for (int o = 3; o <= exp.order; o += 2)
    for (const auto& m : enumerate_all(o)) {
      const IndexData& pr = exp.at(m);
      const IndexDerivative& d = D[flat_index(m)];
      dO += half_i * ((d.dR2 - d.dR1) * std::pow(state.rho, o - 1) +
                      out.dRho * (pr.R2 - pr.R1) * double(o - 1) * std::pow(state.rho, o - 2));
    }
  out.dOmega = dO.real();
  out.imag_residue = std::max(out.imag_residue, std::abs(dO.imag()) / std::max(std::abs(dO), 1e-300));
  return out;
}

SensitivityReport sensitivity_direct(const MechModel& model, const SsmExpansion& exp,
                                     const AmplitudeTarget& target) {
  const TargetState st = evaluate_target(exp, target);
  const auto t0 = std::chrono::steady_clock::now();
  SensitivityReport r;
  r.method = "direct";
  r.order = exp.order;
  r.x0 = target.x0;
  r.rho = st.rho;
  r.omega = st.omega;
  r.dOmega.resize(model.param_count());
  const EigenSensitivity eig(model, exp.master);
  for (int p = 0; p < model.param_count(); ++p) {
    const DirectDerivatives d = chain_derivatives(model, exp, st, target, p, eig);
    r.params.push_back(d.param);
    r.dOmega[p] = d.dOmega;
    r.max_imag = std::max(r.max_imag, d.imag_residue);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace ssmopt
