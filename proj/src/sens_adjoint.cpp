#include "ssmopt/sens_adjoint.hpp"

#include <chrono>
#include <cmath>

#include "ssmopt/error.hpp"
#include "ssmopt/sens_direct.hpp"

namespace ssmopt {

namespace {

// Reverse-mode accumulators. Every complex coefficient is treated as an
// independent holomorphic variable, so adjoints use plain transposes. In the
// canonical sweep each contribution from an index with a distinct partner is
// mirrored onto the conjugate variable.
struct Bars {
  std::vector<CVec> w, wd;
  std::vector<Complex> R1, R2;
  Complex lam[3];
  CVec phi;
  Complex omega;
  CMat M, K, C;
  bool mirror = false;

  void add_w(const MultiIndex& u, const CVec& c) {
    w[flat_index(u)] += c;
    if (mirror) w[flat_index(u.symmetric())] += c.conjugate();
  }
  void add_wd(const MultiIndex& u, const CVec& c) {
    wd[flat_index(u)] += c;
    if (mirror) wd[flat_index(u.symmetric())] += c.conjugate();
  }
  void add_R(const MultiIndex& k, int j, Complex c) {
    (j == 1 ? R1 : R2)[flat_index(k)] += c;
    if (mirror) (j == 1 ? R2 : R1)[flat_index(k.symmetric())] += std::conj(c);
  }
  void add_lam(int j, Complex c) {
    lam[j] += c;
    if (mirror) lam[3 - j] += std::conj(c);
  }
  void add_phi(const CVec& c) {
    phi += c;
    if (mirror) phi += c.conjugate();
  }
  void add_omega(Complex c) {
    omega += c;
    if (mirror) omega += std::conj(c);
  }
  void add_outer(CMat& target, Complex s, const CVec& a, const CVec& b) {
    if (mirror)
      target.noalias() += (2.0 * (s * a * b.transpose()).real()).cast<Complex>();
    else
      target.noalias() += s * a * b.transpose();
  }
};

template <typename F>
void for_each_pair(const MultiIndex& m, F&& f) {
  for (int u1 = 0; u1 <= m.m1; ++u1)
    for (int u2 = 0; u2 <= m.m2; ++u2) {
      const MultiIndex u{u1, u2}, k{m.m1 - u1, m.m2 - u2};
      if (u.order() < 1 || k.order() < 1) continue;
      f(u, k);
    }
}

template <typename F>
void for_each_triple(const MultiIndex& m, F&& f) {
  for (int u1 = 0; u1 <= m.m1; ++u1)
    for (int u2 = 0; u2 <= m.m2; ++u2)
      for (int k1 = 0; k1 <= m.m1 - u1; ++k1)
        for (int k2 = 0; k2 <= m.m2 - u2; ++k2) {
          const MultiIndex u{u1, u2}, k{k1, k2}, l{m.m1 - u1 - k1, m.m2 - u2 - k2};
          if (u.order() < 1 || k.order() < 1 || l.order() < 1) continue;
          f(u, k, l);
        }
}

double max_imag(const CMat& a) { return a.size() ? a.imag().cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double solve_adjoint_rho(const TargetState& state) {
  if (state.dx_drho == 0.0) fail(ErrorCode::TurningPoint, "dx/drho vanishes at the target amplitude");
  return -state.domega_drho / state.dx_drho;
}

AdjointState solve_adjoint(const MechModel& model, const SsmExpansion& exp, const TargetState& state,
                           const AmplitudeTarget& target) {
  const int n = model.n;
  const int O = exp.order;
  const MasterPair& mp = exp.master;
  const double w = mp.omega;
  const double rho = state.rho;
  const CVec phi = mp.phi.cast<Complex>();
  const CMat Mc = model.M.cast<Complex>();
  const CMat Cc = exp.C.cast<Complex>();
  const int sz = flat_size(O);

  AdjointState adj;
  adj.lambda_rho = solve_adjoint_rho(state);
  adj.lambda_w.assign(sz, CVec());
  adj.bar_f.assign(sz, CVec());
  adj.f_weight.assign(sz, 0.0);

  Bars b;
  b.w.assign(sz, CVec::Zero(n));
  b.wd.assign(sz, CVec::Zero(n));
  b.R1.assign(sz, Complex(0.0));
  b.R2.assign(sz, Complex(0.0));
  b.lam[0] = b.lam[1] = b.lam[2] = Complex(0.0);
  b.phi = CVec::Zero(n);
  b.omega = Complex(0.0);
  b.M = CMat::Zero(n, n);
  b.K = CMat::Zero(n, n);
  b.C = CMat::Zero(n, n);

  // Seeds from Omega and from the fixed-amplitude constraint.
  const Complex half_i(0.0, 0.5);
  b.lam[1] = -half_i;
  b.lam[2] = half_i;
  for (int o = 3; o <= O; o += 2)
    for (const auto& m : enumerate_all(o)) {
      b.R1[flat_index(m)] += -half_i * std::pow(rho, o - 1);
      b.R2[flat_index(m)] += half_i * std::pow(rho, o - 1);
    }
  const int N = target.theta_samples;
  const double x = std::sqrt(state.x_samples.squaredNorm() / N);
  for (int o = 1; o <= O; ++o) {
    const double rp = std::pow(rho, o);
    for (const auto& m : enumerate_all(o)) {
      Complex s(0.0);
      for (int k = 0; k < N; ++k) s += state.x_samples[k] * std::pow(state.phase[k], m.m1 - m.m2);
      b.w[flat_index(m)][target.dof] += adj.lambda_rho * rp * s / (N * x);
    }
  }

  for (int o = O; o >= 2; --o) {
    const std::vector<MultiIndex> idx = exp.full_set ? enumerate_all(o) : enumerate(o).indices;
    for (const auto& q : idx) {
      const int fq = flat_index(q);
      const IndexData& pr = exp.at(q);
      b.mirror = !exp.full_set && !q.self_symmetric();
      const Complex Lam = pr.Lambda;
      const int j = pr.res == Resonance::R1 ? 1 : (pr.res == Resonance::R2 ? 2 : 0);
      Complex bLam(0.0);
      Complex bRj = j == 1 ? b.R1[fq] : (j == 2 ? b.R2[fq] : Complex(0.0));
      const Complex Rj = j ? pr.R(j) : Complex(0.0);

      // wdot = Lambda w + R phi + V
      const CVec& bwd = b.wd[fq];
      bLam += (bwd.transpose() * pr.w).value();
      const CVec bw = b.w[fq] + Lam * bwd;
      if (j) {
        bRj += (bwd.transpose() * phi).value();
        b.add_phi(Rj * bwd);
      }
      CVec bV = bwd;

      // L w = h, possibly bordered by phi^T M w = 0 (L is complex symmetric).
      CVec y;
      if (pr.border > 0.0) {
        CVec rhs(n + 1);
        rhs.head(n) = bw;
        rhs[n] = 0.0;
        const CVec yy = pr.lu->solve(rhs);
        y = yy.head(n);
        const Complex ys = yy[n];
        b.add_phi(-ys * pr.border * (Mc * pr.w));
        b.add_outer(b.M, -ys * pr.border, pr.w, phi);
      } else {
        y = pr.lu->solve(bw);
      }
      adj.lambda_w[fq] = -y;
      b.add_outer(b.K, -1.0, y, pr.w);
      b.add_outer(b.C, -Lam, y, pr.w);
      b.add_outer(b.M, -Lam * Lam, y, pr.w);
      bLam += -(y.transpose() * (Cc * pr.w + 2.0 * Lam * (Mc * pr.w))).value();

      // h = C_m + D R
      CVec bCm = y;
      if (j) {
        const Complex lj = exp.lambda(j);
        const CVec bD = y * Rj;
        bRj += (y.transpose() * pr.D).value();
        // D = -((Lambda + lambda_j) M + C) phi
        const Complex t = -(bD.transpose() * (Mc * phi)).value();
        bLam += t;
        b.add_lam(j, t);
        b.add_outer(b.M, -(Lam + lj), bD, phi);
        b.add_outer(b.C, -1.0, bD, phi);
        b.add_phi(-((Lam + lj) * (Mc * bD) + Cc * bD));
        // R = phi^T C_m / den
        bCm += (bRj / pr.den) * phi;
        b.add_phi((bRj / pr.den) * pr.Cm);
        const Complex bden = -bRj * Rj / pr.den;
        bLam += bden;
        b.add_lam(j, bden);
        b.add_omega(bden * 2.0 * model.beta * w);
      }

      // C_m = -M Vdot - (Lambda M + C) V - f
      const CVec bVd = -(Mc * bCm);
      bV += -(Lam * (Mc * bCm) + Cc * bCm);
      const CVec bf = -bCm;
      b.add_outer(b.M, -1.0, bCm, pr.Vdot);
      b.add_outer(b.M, -Lam, bCm, pr.V);
      b.add_outer(b.C, -1.0, bCm, pr.V);
      bLam += -(bCm.transpose() * (Mc * pr.V)).value();

      // V and Vdot from lower orders.
      for (int ko = 2; ko < o; ++ko)
        for (const auto& k : enumerate_all(ko)) {
          const IndexData& kd = exp.at(k);
          for (int jj = 1; jj <= 2; ++jj) {
            const Complex r = kd.R(jj);
            if (r == Complex(0.0)) continue;
            const MultiIndex u{q.m1 - k.m1 + (jj == 1), q.m2 - k.m2 + (jj == 2)};
            if (u.m1 < 0 || u.m2 < 0) continue;
            const int uj = jj == 1 ? u.m1 : u.m2;
            if (uj == 0) continue;
            const IndexData& ud = exp.at(u);
            b.add_w(u, (double(uj) * r) * bV);
            b.add_wd(u, (double(uj) * r) * bVd);
            b.add_R(k, jj, double(uj) * ((bV.transpose() * ud.w).value() + (bVd.transpose() * ud.wdot).value()));
          }
        }

      // Nonlinear force.
      adj.bar_f[fq] = bf;
      adj.f_weight[fq] = b.mirror ? 2.0 : 1.0;
      if (!model.T2.empty())
        for_each_pair(q, [&](const MultiIndex& u, const MultiIndex& k) {
          CVec g = CVec::Zero(n);
          model.T2.adjoint_slot_add(bf, exp.at(k).w, g);
          b.add_w(u, 2.0 * g);
        });
      if (!model.T3.empty())
        for_each_triple(q, [&](const MultiIndex& u, const MultiIndex& k, const MultiIndex& l) {
          CVec g = CVec::Zero(n);
          model.T3.adjoint_slot_add(bf, exp.at(k).w, exp.at(l).w, g);
          b.add_w(u, 3.0 * g);
        });

      // Lambda_m = m1 lambda + m2 lambda_bar
      b.add_lam(1, double(q.m1) * bLam);
      b.add_lam(2, double(q.m2) * bLam);
    }
  }

  // Leading order: w = phi, wdot = lambda_j phi, R^j = lambda_j.
  b.mirror = false;
  for (int j = 1; j <= 2; ++j) {
    const MultiIndex m = j == 1 ? MultiIndex{1, 0} : MultiIndex{0, 1};
    const int fm = flat_index(m);
    b.phi += b.w[fm] + exp.lambda(j) * b.wd[fm];
    b.lam[j] += (b.wd[fm].transpose() * phi).value();
    b.lam[j] += j == 1 ? b.R1[fm] : b.R2[fm];
  }
  const double xi = mp.xi;
  const double xip = (model.beta * w * w - model.alpha) / (2.0 * w * w);
  const double sq = std::sqrt(1.0 - xi * xi);
  const Complex dl_dw(-xi - w * xip, sq - w * xi * xip / sq);
  b.omega += b.lam[1] * dl_dw + b.lam[2] * std::conj(dl_dw);

  adj.imag_residue = std::max({b.phi.imag().cwiseAbs().maxCoeff() / std::max(b.phi.cwiseAbs().maxCoeff(), 1e-300),
                               std::abs(b.omega.imag()) / std::max(std::abs(b.omega), 1e-300)});

  // Eigenpair adjoint: E z = [bar_phi; bar_omega] with E the symmetric bordered matrix.
  const EigenSensitivity eig(model, mp);
  Vec g(n + 1);
  g.head(n) = b.phi.real();
  g[n] = b.omega.real();
  const Vec z = eig.solve_raw(g);
  const Vec zphi = z.head(n);
  adj.lambda_phi = -zphi;
  adj.lambda_omega = w * z[n];

  const double scaleM = std::max(b.M.cwiseAbs().maxCoeff(), 1e-300);
  const double scaleK = std::max(b.K.cwiseAbs().maxCoeff(), 1e-300);
  adj.imag_residue = std::max({adj.imag_residue, max_imag(b.M) / scaleM, max_imag(b.K) / scaleK});
  adj.barM = b.M.real() + model.alpha * b.C.real() + (w * w) * zphi * mp.phi.transpose() +
             (w * z[n]) * mp.phi * mp.phi.transpose();
  adj.barK = b.K.real() + model.beta * b.C.real() - zphi * mp.phi.transpose();
  return adj;
}

Vec contract_gradient(const MechModel& model, const SsmExpansion& exp, const AdjointState& adj) {
  Vec g(model.param_count());
  for (int p = 0; p < model.param_count(); ++p) {
    const ParamDerivative& pd = model.params[p];
    double s = 0.0;
    for (int k = 0; k < pd.dM.outerSize(); ++k)
      for (SpMat::InnerIterator it(pd.dM, k); it; ++it) s += adj.barM(it.row(), it.col()) * it.value();
    for (int k = 0; k < pd.dK.outerSize(); ++k)
      for (SpMat::InnerIterator it(pd.dK, k); it; ++it) s += adj.barK(it.row(), it.col()) * it.value();
    if (!pd.dT2.empty() || !pd.dT3.empty()) {
      for (int fq = 0; fq < static_cast<int>(adj.bar_f.size()); ++fq) {
        if (adj.f_weight[fq] == 0.0) continue;
        const CVec& bf = adj.bar_f[fq];
        const MultiIndex q = exp.data[fq].m;
        Complex c(0.0);
        if (!pd.dT2.empty())
          for_each_pair(q, [&](const MultiIndex& u, const MultiIndex& k) {
            for (const auto& e : pd.dT2.entries()) {
              const CVec& wu = exp.at(u).w;
              const CVec& wk = exp.at(k).w;
              const Complex prod = e.j == e.k ? wu[e.j] * wk[e.k] : wu[e.j] * wk[e.k] + wu[e.k] * wk[e.j];
              c += bf[e.i] * e.v * prod;
            }
          });
        if (!pd.dT3.empty())
          for_each_triple(q, [&](const MultiIndex& u, const MultiIndex& k, const MultiIndex& l) {
            const CVec& wu = exp.at(u).w;
            const CVec& wk = exp.at(k).w;
            const CVec& wl = exp.at(l).w;
            std::array<std::array<int, 3>, 6> perm;
            for (const auto& e : pd.dT3.entries()) {
              const int np = SymTensor4::permutations(e.j, e.k, e.l, perm);
              Complex acc(0.0);
              for (int t = 0; t < np; ++t) acc += wu[perm[t][0]] * wk[perm[t][1]] * wl[perm[t][2]];
              c += bf[e.i] * e.v * acc;
            }
          });
        s += adj.f_weight[fq] == 2.0 ? 2.0 * c.real() : c.real();
      }
    }
    g[p] = s;
  }
  return g;
}

SensitivityReport sensitivity_adjoint(const MechModel& model, const SsmExpansion& exp,
                                      const AmplitudeTarget& target) {
  const TargetState st = evaluate_target(exp, target);
  const auto t0 = std::chrono::steady_clock::now();
  const AdjointState adj = solve_adjoint(model, exp, st, target);
  SensitivityReport r;
  r.method = "adjoint";
  r.order = exp.order;
  r.x0 = target.x0;
  r.rho = st.rho;
  r.omega = st.omega;
  r.dOmega = contract_gradient(model, exp, adj);
  for (const auto& p : model.params) r.params.push_back(p.name);
  r.max_imag = adj.imag_residue;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace ssmopt
