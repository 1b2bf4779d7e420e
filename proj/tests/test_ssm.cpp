#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ssmopt/error.hpp"
#include "ssmopt/models.hpp"
#include "ssmopt/ssm.hpp"

using namespace ssmopt;

namespace {

MechModel chain3() { return build_chain(ChainSpec::uniform(3, 1.0, 1.0, 0.3, 0.2, 0.0, 0.05)); }

// Reduced dynamics p1' = sum R1_m p^m, integrated with RK4 in the complex plane.
Complex reduced_rhs(const SsmExpansion& exp, Complex p1) {
  Complex r(0.0);
  for (int o = 1; o <= exp.order; ++o)
    for (const auto& m : enumerate_all(o)) r += exp.at(m).R1 * monomial(p1, std::conj(p1), m);
  return r;
}

// Relative max displacement deviation between the full model started on the
// manifold and the manifold image of the reduced trajectory.
double trajectory_error(const MechModel& model, const SsmExpansion& exp, double rho, double t_end) {
  const Mat C = assemble_damping(model);
  const Eigen::LLT<Mat> Mf(model.M);
  auto accel = [&](const Vec& x, const Vec& v) -> Vec { return Mf.solve(Vec(-C * v - model.K * x - nonlinear_force(model, x))); };
  Complex p = rho;
  const ManifoldPoint p0 = evaluate_manifold(exp, p, std::conj(p));
  Vec x = p0.w.real(), v = p0.wdot.real();
  const double dt = 2e-3;
  const int steps = static_cast<int>(t_end / dt);
  double worst = 0.0, scale = 0.0;
  for (int s = 0; s < steps; ++s) {
    const Vec k1x = v, k1v = accel(x, v);
    const Vec k2x = v + 0.5 * dt * k1v, k2v = accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
    const Vec k3x = v + 0.5 * dt * k2v, k3v = accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
    const Vec k4x = v + dt * k3v, k4v = accel(x + dt * k3x, v + dt * k3v);
    x += dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    const Complex q1 = reduced_rhs(exp, p);
    const Complex q2 = reduced_rhs(exp, p + 0.5 * dt * q1);
    const Complex q3 = reduced_rhs(exp, p + 0.5 * dt * q2);
    const Complex q4 = reduced_rhs(exp, p + dt * q3);
    p += dt / 6 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
    const Vec xr = evaluate_manifold(exp, p, std::conj(p)).w.real();
    worst = std::max(worst, (x - xr).cwiseAbs().maxCoeff());
    scale = std::max(scale, x.cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

}  // namespace

TEST(Ssm, CohomologicalResidualsAtRoundoff) {
  const MechModel m = chain3();
  const SsmExpansion e = compute_ssm(m, solve_master(m, 0), 7);
  for (int o = 2; o <= 7; ++o)
    for (const auto& mi : enumerate(o).indices) EXPECT_LT(cohomological_residual(m, e, mi), 1e-12) << mi.m1 << "," << mi.m2;
}

TEST(Ssm, ConjugateShortcutMatchesFullSolve) {
  const MechModel m = chain3();
  const MasterPair mp = solve_master(m, 0);
  const SsmExpansion canon = compute_ssm(m, mp, 7);
  const SsmExpansion full = compute_ssm(m, mp, 7, SsmOptions{true});
  for (int o = 1; o <= 7; ++o)
    for (const auto& mi : enumerate_all(o)) {
      const IndexData& a = canon.at(mi);
      const IndexData& b = full.at(mi);
      const double s = 1.0 + b.w.norm();
      EXPECT_LT((a.w - b.w).norm() / s, 1e-10) << mi.m1 << "," << mi.m2;
      EXPECT_LT((a.wdot - b.wdot).norm() / (1.0 + b.wdot.norm()), 1e-10);
      EXPECT_LT(std::abs(a.R1 - b.R1) + std::abs(a.R2 - b.R2), 1e-10 * (1.0 + std::abs(b.R1) + std::abs(b.R2)));
      // Reality of the parametrization: W_{m2,m1} = conj(W_{m1,m2}).
      EXPECT_LT((b.w - full.at(mi.symmetric()).w.conjugate()).norm() / s, 1e-10);
    }
}

TEST(Ssm, LinearModelHasFlatManifold) {
  const MechModel m = build_chain(ChainSpec::uniform(3, 1.0, 1.0, 0.0, 0.0, 0.01, 0.02));
  const SsmExpansion e = compute_ssm(m, solve_master(m, 0), 7);
  for (int o = 2; o <= 7; ++o)
    for (const auto& mi : enumerate_all(o)) {
      EXPECT_EQ(e.at(mi).w.norm(), 0.0);
      EXPECT_EQ(std::abs(e.at(mi).R1) + std::abs(e.at(mi).R2), 0.0);
    }
  EXPECT_LT(invariance_residual(m, e, 0.5).epsilon, 1e-14);
}

TEST(Ssm, ReducedDynamicsHaveNormalFormStructure) {
  const MechModel m = chain3();
  const SsmExpansion e = compute_ssm(m, solve_master(m, 0), 7);
  for (int o = 2; o <= 7; ++o)
    for (const auto& mi : enumerate_all(o)) {
      const IndexData& d = e.at(mi);
      if (near_resonant(mi) != Resonance::R1) { EXPECT_EQ(d.R1, Complex(0.0)); }
      if (near_resonant(mi) != Resonance::R2) { EXPECT_EQ(d.R2, Complex(0.0)); }
    }
  EXPECT_NE(e.at({2, 1}).R1, Complex(0.0));
  EXPECT_EQ(e.at({2, 1}).R1, std::conj(e.at({1, 2}).R2));
}

TEST(Ssm, InvarianceErrorScalesWithOrder) {
  const MechModel m = chain3();
  const MasterPair mp = solve_master(m, 0);
  for (int order : {3, 5, 7}) {
    const SsmExpansion e = compute_ssm(m, mp, order);
    // Above the roundoff floor of the highest order.
    const double r1 = 0.05, r2 = 0.1;
    const double slope = std::log(invariance_residual(m, e, r2).epsilon / invariance_residual(m, e, r1).epsilon) /
                         std::log(r2 / r1);
    EXPECT_GE(slope, order - 0.5) << "order " << order;
  }
}

TEST(Ssm, ErrorDecreasesWithOrderAtFixedAmplitude) {
  const MechModel m = chain3();
  const MasterPair mp = solve_master(m, 0);
  double prev = INFINITY;
  for (int order : {3, 5, 7}) {
    const double eps = invariance_residual(m, compute_ssm(m, mp, order), 0.1).epsilon;
    EXPECT_LE(eps, prev) << "order " << order;
    prev = eps;
  }
}

TEST(Ssm, ManifoldIsInvariantUnderFullDynamics) {
  const MechModel m = build_chain(ChainSpec::two_oscillators());
  const MasterPair mp = solve_master(m, 0);
  const double period = 2 * std::numbers::pi / mp.omega_d();
  const double e3 = trajectory_error(m, compute_ssm(m, mp, 3), 0.1, 2 * period);
  const double e7 = trajectory_error(m, compute_ssm(m, mp, 7), 0.1, 2 * period);
  EXPECT_LT(e7, 1e-4);
  EXPECT_LT(e7, e3);
}

TEST(Ssm, ExtendKeepsLowerOrders) {
  const MechModel m = chain3();
  const MasterPair mp = solve_master(m, 0);
  SsmExpansion e = compute_ssm(m, mp, 3);
  const CVec w21 = e.at({2, 1}).w;
  extend_ssm(m, e, 7);
  EXPECT_EQ(e.order, 7);
  EXPECT_EQ(e.at({2, 1}).w, w21);
  const SsmExpansion direct = compute_ssm(m, mp, 7);
  EXPECT_LT((e.at({4, 3}).w - direct.at({4, 3}).w).norm(), 1e-14 * (1.0 + direct.at({4, 3}).w.norm()));
}

TEST(Ssm, RejectsEvenOrInvalidOrders) {
  const MechModel m = chain3();
  const MasterPair mp = solve_master(m, 0);
  EXPECT_THROW(compute_ssm(m, mp, 4), Error);
  EXPECT_THROW(compute_ssm(m, mp, 1), Error);
  SsmExpansion e = compute_ssm(m, mp, 5);
  EXPECT_THROW(extend_ssm(m, e, 3), Error);
  EXPECT_THROW(invariance_residual(m, e, 0.0), Error);
}

TEST(Ssm, InternalResonanceDetected) {
  // Undamped, omega_2 = 2 omega_1: Lambda_{2,0} = 2i hits the second mode.
  MechModel m;
  m.n = 2;
  m.M = Mat::Identity(2, 2);
  m.K = Vec((Vec(2) << 1.0, 4.0).finished()).asDiagonal();
  m.T2 = SymTensor3(2);
  m.T2.add_raw(1, 0, 0, 1.0);
  m.T2.compress();
  m.T3 = SymTensor4(2);
  try {
    compute_ssm(m, solve_master(m, 0), 3);
    FAIL() << "expected outer-resonance";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OuterResonance);
  }
}

TEST(Ssm, AdaptiveOrderNeverDecreases) {
  const MechModel m = chain3();
  const MasterPair mp = solve_master(m, 0);
  const AdaptResult r = adapt_order(m, mp, 1e-6, 0.2, 3, 11);
  ASSERT_FALSE(r.history.empty());
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_EQ(r.history[i].first, r.history[i - 1].first + 2);
  EXPECT_EQ(r.expansion.order, r.history.back().first);
  if (r.converged) EXPECT_LE(r.error.epsilon, 1e-6);
  else EXPECT_EQ(r.expansion.order, 11);

  const AdaptResult loose = adapt_order(m, mp, 1.0, 0.2, 5, 11);
  EXPECT_EQ(loose.expansion.order, 5);
  EXPECT_EQ(loose.history.size(), 1u);
  const AdaptResult cont = adapt_order(m, loose.expansion, 1e-6, 0.2, 11);
  EXPECT_GE(cont.expansion.order, 5);
}
