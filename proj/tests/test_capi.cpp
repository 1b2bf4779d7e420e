#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ssmopt/ssmopt.h"

namespace {

struct ModelDel {
  void operator()(ssmopt_model* m) const { ssmopt_model_free(m); }
};
struct ExpDel {
  void operator()(ssmopt_expansion* e) const { ssmopt_expansion_free(e); }
};
using ModelPtr = std::unique_ptr<ssmopt_model, ModelDel>;
using ExpPtr = std::unique_ptr<ssmopt_expansion, ExpDel>;

std::string take(char* s) {
  std::string out = s ? s : "";
  ssmopt_string_free(s);
  return out;
}

ModelPtr catalog(const char* name) {
  ssmopt_model* m = nullptr;
  EXPECT_EQ(ssmopt_model_catalog(name, &m), SSMOPT_OK);
  return ModelPtr(m);
}

ExpPtr expansion(const ssmopt_model* m, int order) {
  ssmopt_expansion* e = nullptr;
  EXPECT_EQ(ssmopt_expansion_compute(m, 0, order, &e), SSMOPT_OK);
  return ExpPtr(e);
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(ssmopt_version(), "0.1.0");
  EXPECT_STREQ(ssmopt_status_name(SSMOPT_OK), "ok");
  EXPECT_STREQ(ssmopt_status_name(SSMOPT_LIGHT_DAMPING), "light-damping-violation");
  EXPECT_EQ(ssmopt_status_class(SSMOPT_OK), 0);
  EXPECT_EQ(ssmopt_status_class(SSMOPT_INVALID_CONFIG), 1);
  EXPECT_EQ(ssmopt_status_class(SSMOPT_LIGHT_DAMPING), 2);
  EXPECT_EQ(ssmopt_status_class(SSMOPT_AMPLITUDE_UNREACHABLE), 3);
  EXPECT_EQ(ssmopt_status_class(SSMOPT_NOT_CONVERGED), 4);
}

TEST(CApi, ModelInfoAndMode) {
  ModelPtr m = catalog("chain2");
  int n = 0, np = 0, dof = -1;
  ASSERT_EQ(ssmopt_model_info(m.get(), &n, &np, &dof), SSMOPT_OK);
  EXPECT_EQ(n, 2);
  EXPECT_EQ(np, 4);
  EXPECT_EQ(dof, 1);
  char* name = nullptr;
  ASSERT_EQ(ssmopt_model_param_name(m.get(), 2, &name), SSMOPT_OK);
  EXPECT_EQ(take(name), "k2");
  EXPECT_EQ(ssmopt_model_param_name(m.get(), 9, &name), SSMOPT_INVALID_ARGUMENT);
  double w, xi, lre, lim;
  ASSERT_EQ(ssmopt_model_mode(m.get(), 0, &w, &xi, &lre, &lim), SSMOPT_OK);
  EXPECT_NEAR(lre, -0.019098, 1e-6);
  EXPECT_NEAR(lim, 0.617739, 1e-6);
}

TEST(CApi, ErrorsMapToStatusAndMessage) {
  ssmopt_model* m = nullptr;
  EXPECT_EQ(ssmopt_model_catalog("nope", &m), SSMOPT_INVALID_CONFIG);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(ssmopt_last_error()).find("nope"), std::string::npos);
  EXPECT_EQ(ssmopt_model_from_json(R"({"type":"chain","n":2,"zz":1})", &m), SSMOPT_INVALID_CONFIG);
  EXPECT_NE(std::string(ssmopt_last_error()).find("model.zz"), std::string::npos);
  EXPECT_EQ(ssmopt_model_from_json(R"({"type":"chain","n":2,"betaR":5})", &m), SSMOPT_OK);
  ModelPtr heavy(m);
  ssmopt_expansion* e = nullptr;
  EXPECT_EQ(ssmopt_expansion_compute(heavy.get(), 0, 3, &e), SSMOPT_LIGHT_DAMPING);
  EXPECT_EQ(ssmopt_model_info(nullptr, nullptr, nullptr, nullptr), SSMOPT_INVALID_ARGUMENT);
  ModelPtr ok = catalog("chain2");
  EXPECT_STREQ(ssmopt_last_error(), "");
}

TEST(CApi, BackboneRoundTrip) {
  ModelPtr m = catalog("chain2");
  ExpPtr e = expansion(m.get(), 5);
  int order = 0;
  ASSERT_EQ(ssmopt_expansion_order(e.get(), &order), SSMOPT_OK);
  EXPECT_EQ(order, 5);
  double rho, x, omega, eps;
  ASSERT_EQ(ssmopt_rho_of_x(e.get(), 1, 0.3, &rho), SSMOPT_OK);
  ASSERT_EQ(ssmopt_x_rms(e.get(), 1, rho, &x), SSMOPT_OK);
  EXPECT_NEAR(x, 0.3, 1e-12);
  ASSERT_EQ(ssmopt_omega_of_rho(e.get(), rho, &omega), SSMOPT_OK);
  EXPECT_NEAR(omega, 0.6177, 5e-3);
  ASSERT_EQ(ssmopt_invariance_error(e.get(), rho, &eps), SSMOPT_OK);
  EXPECT_LT(eps, 0.1);
  EXPECT_EQ(ssmopt_rho_of_x(e.get(), 1, 50.0, &rho), SSMOPT_AMPLITUDE_UNREACHABLE);
  const double xs[] = {0.1, 0.2};
  char* csv = nullptr;
  ASSERT_EQ(ssmopt_backbone_csv(e.get(), 1, xs, 2, &csv), SSMOPT_OK);
  EXPECT_EQ(take(csv).rfind("rho,omega,x\n", 0), 0u);
  char* js = nullptr;
  ASSERT_EQ(ssmopt_expansion_to_json(e.get(), &js), SSMOPT_OK);
  EXPECT_NE(take(js).find("\"coefficients\""), std::string::npos);
}

TEST(CApi, AdaptiveExpansion) {
  ModelPtr m = catalog("chain2");
  ssmopt_expansion* raw = nullptr;
  int converged = 0;
  char* hist = nullptr;
  ASSERT_EQ(ssmopt_expansion_adapt(m.get(), 0, 1, 0.5, 1e-2, 3, 9, &raw, &converged, &hist), SSMOPT_OK);
  ExpPtr e(raw);
  EXPECT_EQ(converged, 1);
  EXPECT_NE(take(hist).find("\"epsilon\""), std::string::npos);
}

TEST(CApi, SensitivitiesAgree) {
  ModelPtr m = catalog("chain2");
  ExpPtr e = expansion(m.get(), 5);
  std::vector<double> ga(4), gd(4), gf(4), rich(4);
  double wa, wd, secs;
  ASSERT_EQ(ssmopt_sensitivity(e.get(), 1, 0.4, SSMOPT_ADJOINT, &wa, ga.data(), &secs), SSMOPT_OK);
  ASSERT_EQ(ssmopt_sensitivity(e.get(), 1, 0.4, SSMOPT_DIRECT, &wd, gd.data(), nullptr), SSMOPT_OK);
  ASSERT_EQ(ssmopt_sensitivity_fd(m.get(), 0, 5, 1, 0.4, gf.data(), rich.data()), SSMOPT_OK);
  EXPECT_EQ(wa, wd);
  EXPECT_GE(secs, 0.0);
  EXPECT_LT(ssmopt_max_relative_error(ga.data(), gd.data(), 4), 1e-9);
  EXPECT_LT(ssmopt_max_relative_error(ga.data(), gf.data(), 4), 1e-6);
  char* js = nullptr;
  ASSERT_EQ(ssmopt_sensitivity_json(e.get(), 1, 0.4, SSMOPT_ADJOINT, &js), SSMOPT_OK);
  EXPECT_NE(take(js).find("\"dOmega\""), std::string::npos);
}

TEST(CApi, VerifyAndOptimize) {
  ModelPtr m = catalog("duffing1");
  char* report = nullptr;
  int failures = -1;
  ASSERT_EQ(ssmopt_verify(m.get(), 5, -1, 0.0, &report, &failures), SSMOPT_OK);
  EXPECT_EQ(failures, 0) << take(report);

  const char* opt = R"({
    "objective": [{"coef": 1.0, "vars": ["k3"]}],
    "constraints": [{"type": "backbone", "x": 0.5, "omega": {"factor_of_omega0": 1.02}}],
    "bounds": {"k": [0.9, 1.1], "k3": [0.01, 1.0]},
    "tolerances": {"maxOrder": 5}
  })";
  char* summary = nullptr;
  char* trace = nullptr;
  ASSERT_EQ(ssmopt_optimize(m.get(), opt, &summary, &trace), SSMOPT_OK) << ssmopt_last_error();
  EXPECT_NE(take(summary).find("\"converged\": true"), std::string::npos);
  EXPECT_EQ(take(trace).rfind("iter,", 0), 0u);
  EXPECT_EQ(ssmopt_optimize(m.get(), R"({"bounds": 3})", nullptr, nullptr), SSMOPT_INVALID_CONFIG);
}

TEST(CApi, BenchChainAndJsonModel) {
  ssmopt_model* raw = nullptr;
  ASSERT_EQ(ssmopt_model_bench_chain(11, 10, 12345, &raw), SSMOPT_OK);
  ModelPtr m(raw);
  int n, np, dof;
  ssmopt_model_info(m.get(), &n, &np, &dof);
  EXPECT_EQ(n, 11);
  EXPECT_EQ(np, 10);
  char* js = nullptr;
  ASSERT_EQ(ssmopt_model_to_json(m.get(), &js), SSMOPT_OK);
  const std::string text = take(js);
  ssmopt_model* back = nullptr;
  ASSERT_EQ(ssmopt_model_from_json(text.c_str(), &back), SSMOPT_OK);
  ModelPtr b(back);
  double w1, w2, xi, lre, lim;
  ssmopt_model_mode(m.get(), 0, &w1, &xi, &lre, &lim);
  ssmopt_model_mode(b.get(), 0, &w2, &xi, &lre, &lim);
  EXPECT_NEAR(w1, w2, 1e-13 * w1);
}
