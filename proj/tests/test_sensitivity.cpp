#include <gtest/gtest.h>

#include <cmath>

#include "ssmopt/error.hpp"
#include "ssmopt/models.hpp"
#include "ssmopt/sens_adjoint.hpp"
#include "ssmopt/sens_direct.hpp"

using namespace ssmopt;

namespace {

struct Case {
  std::string name;
  int order;
  double x0;
  double fd_tol;
};

struct Pipeline {
  std::unique_ptr<ModelFactory> factory;
  MechModel model;
  MasterPair master;
  SsmExpansion exp;
  AmplitudeTarget target;
};

Pipeline setup(const std::string& name, int order, double x0) {
  Pipeline s;
  s.factory = make_catalog_model(name);
  s.model = s.factory->build();
  s.master = solve_master(s.model, 0);
  s.exp = compute_ssm(s.model, s.master, order);
  s.target.dof = s.factory->default_dof();
  s.target.x0 = x0;
  return s;
}

}  // namespace

TEST(EigenDerivative, MatchesFiniteDifferences) {
  const auto f = make_catalog_model("chain2");
  const Vec mu = f->design_values();
  const MechModel m = f->build(mu);
  const MasterPair mp = solve_master(m, 0);
  const auto d = eig_derivatives(m, mp);
  ASSERT_EQ(d.size(), m.params.size());
  for (std::size_t p = 0; p < d.size(); ++p) {
    const double h = 1e-6 * (1.0 + std::abs(mu[p]));
    Vec up = mu, dn = mu;
    up[p] += h;
    dn[p] -= h;
    const MasterPair a = track_mode(f->build(up), mp.phi), b = track_mode(f->build(dn), mp.phi);
    EXPECT_NEAR(d[p].domega, (a.omega - b.omega) / (2 * h), 1e-8);
    EXPECT_LT((d[p].dphi - (a.phi - b.phi) / (2 * h)).norm(), 1e-7);
    // Mass normalization is preserved to first order.
    EXPECT_NEAR(2 * mp.phi.dot(m.M * d[p].dphi) + mp.phi.dot(Mat(m.params[p].dM) * mp.phi), 0.0, 1e-12);
  }
}

class ThreeWay : public ::testing::TestWithParam<Case> {};

TEST_P(ThreeWay, AdjointDirectAndFiniteDifferencesAgree) {
  const Case c = GetParam();
  Pipeline s = setup(c.name, c.order, c.x0);
  const SensitivityReport adj = sensitivity_adjoint(s.model, s.exp, s.target);
  const SensitivityReport dir = sensitivity_direct(s.model, s.exp, s.target);
  const FdReport fd = sensitivity_fd(*s.factory, s.factory->design_values(), s.master.phi, c.order, s.target);
  ASSERT_EQ(adj.dOmega.size(), static_cast<Eigen::Index>(s.model.params.size()));
  EXPECT_LT(max_relative_error(adj.dOmega, dir.dOmega), 1e-9);
  EXPECT_LT(max_relative_error(adj.dOmega, fd.report.dOmega), c.fd_tol);
  EXPECT_NEAR(adj.omega, dir.omega, 1e-14 * dir.omega);
  EXPECT_NEAR(adj.omega, fd.report.omega, 1e-12 * dir.omega);
  EXPECT_LT(adj.max_imag, 1e-8);
  EXPECT_LT(dir.max_imag, 1e-8);
  EXPECT_EQ(adj.method, "adjoint");
  EXPECT_EQ(dir.method, "direct");
}

INSTANTIATE_TEST_SUITE_P(Models, ThreeWay,
                         ::testing::Values(Case{"chain2", 3, 0.3, 1e-6}, Case{"chain2", 5, 0.5, 1e-6},
                                           Case{"chain2", 7, 0.5, 1e-6}, Case{"duffing1", 3, 0.5, 1e-6},
                                           Case{"duffing1", 7, 1.0, 1e-6}, Case{"vk_beam", 3, 0.002, 1e-5},
                                           Case{"vk_beam", 5, 0.004, 1e-5}),
                         [](const auto& info) { return info.param.name + "_o" + std::to_string(info.param.order); });

TEST(Sensitivity, AmplitudeParameterDerivativeMatchesFd) {
  Pipeline s = setup("chain2", 5, 0.4);
  const TargetState st = evaluate_target(s.exp, s.target);
  const EigenSensitivity eig(s.model, s.master);
  const Vec mu = s.factory->design_values();
  for (int p = 0; p < static_cast<int>(s.model.params.size()); ++p) {
    const DirectDerivatives d = chain_derivatives(s.model, s.exp, st, s.target, p, eig);
    const double h = 1e-6 * (1.0 + std::abs(mu[p]));
    auto rho_at = [&](double delta) {
      Vec v = mu;
      v[p] += delta;
      const MechModel m = s.factory->build(v);
      return rho_of_x(compute_ssm(m, track_mode(m, s.master.phi), 5), s.target.dof, s.target.x0);
    };
    EXPECT_NEAR(d.dRho, (rho_at(h) - rho_at(-h)) / (2 * h), 1e-7 * (1.0 + std::abs(d.dRho)));
  }
}

TEST(Sensitivity, AdjointRhoMultiplier) {
  Pipeline s = setup("chain2", 5, 0.4);
  const TargetState st = evaluate_target(s.exp, s.target);
  EXPECT_DOUBLE_EQ(solve_adjoint_rho(st), -st.domega_drho / st.dx_drho);
}

TEST(Sensitivity, LinearModelReducesToDampedFrequencyDerivative) {
  ChainSpec spec = ChainSpec::uniform(2, 1.0, 1.0, 0.0, 0.0, 0.0, 0.1);
  spec.params = {"m", "k"};
  ChainFactory f(spec);
  const MechModel m = f.build(f.design_values());
  const MasterPair mp = solve_master(m, 0);
  const SsmExpansion e = compute_ssm(m, mp, 3);
  const AmplitudeTarget t{1, 0.2};
  const SensitivityReport adj = sensitivity_adjoint(m, e, t);
  const Vec mu = f.design_values();
  for (int p = 0; p < 2; ++p) {
    const double h = 1e-6;
    Vec up = mu, dn = mu;
    up[p] += h;
    dn[p] -= h;
    const double fd = (solve_master(f.build(up), 0).omega_d() - solve_master(f.build(dn), 0).omega_d()) / (2 * h);
    EXPECT_NEAR(adj.dOmega[p], fd, 1e-8);
  }
  EXPECT_DOUBLE_EQ(adj.omega, mp.omega_d());
}

TEST(Sensitivity, RichardsonRatioNearFour) {
  Pipeline s = setup("chain2", 5, 0.5);
  const FdReport fd = sensitivity_fd(*s.factory, s.factory->design_values(), s.master.phi, 5, s.target,
                                     FdOptions{1e-3});
  for (int p = 0; p < fd.richardson_ratio.size(); ++p) EXPECT_NEAR(fd.richardson_ratio[p], 4.0, 0.2) << p;
}

TEST(Sensitivity, PipelineMatchesDirectEvaluation) {
  Pipeline s = setup("chain2", 5, 0.5);
  const double w = pipeline_omega(*s.factory, s.factory->design_values(), s.master.phi, 5, s.target);
  EXPECT_DOUBLE_EQ(w, omega_of_rho(s.exp, rho_of_x(s.exp, s.target.dof, 0.5)));
}

TEST(Sensitivity, RelativeErrorFloor) {
  const Vec a = (Vec(3) << 1.0, 2.0, 1e-12).finished();
  const Vec b = (Vec(3) << 1.0, 2.2, 0.0).finished();
  EXPECT_NEAR(max_relative_error(a, b), 0.2 / 2.2, 1e-15);
  const Vec c = (Vec(2) << 1.0, 1e-3).finished();
  const Vec d = (Vec(2) << 1.0, 0.0).finished();
  EXPECT_NEAR(max_relative_error(c, d), 1e-3 / 1e-6, 1e-6);
}
