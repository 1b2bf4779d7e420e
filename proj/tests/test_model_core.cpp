#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ssmopt/error.hpp"
#include "ssmopt/model.hpp"
#include "ssmopt/models.hpp"

using namespace ssmopt;

namespace {

Vec random_vec(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

MechModel random_model(int n, std::mt19937& rng) {
  MechModel m;
  m.n = n;
  Mat a = Mat::Random(n, n);
  m.M = a * a.transpose() + n * Mat::Identity(n, n);
  Mat b = Mat::Random(n, n);
  m.K = b * b.transpose() + Mat::Identity(n, n);
  m.alpha = 0.01;
  m.beta = 0.002;
  m.T2 = SymTensor3(n);
  m.T3 = SymTensor4(n);
  std::uniform_int_distribution<int> idx(0, n - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int e = 0; e < 3 * n; ++e) {
    m.T2.add_raw(idx(rng), idx(rng), idx(rng), val(rng));
    m.T3.add_raw(idx(rng), idx(rng), idx(rng), idx(rng), val(rng));
  }
  m.T2.compress();
  m.T3.compress();
  return m;
}

}  // namespace

TEST(SymTensor, RawEntrySymmetrizedAndContractedLikeDenseSum) {
  const int n = 4;
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> idx(0, n - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  SymTensor3 t(n);
  std::vector<std::array<int, 3>> raw;
  std::vector<double> vals;
  for (int e = 0; e < 20; ++e) {
    raw.push_back({idx(rng), idx(rng), idx(rng)});
    vals.push_back(val(rng));
    t.add_raw(raw.back()[0], raw.back()[1], raw.back()[2], vals.back());
  }
  t.compress();
  const Vec x = random_vec(n, rng);
  Vec ref = Vec::Zero(n);
  for (std::size_t e = 0; e < raw.size(); ++e) ref[raw[e][0]] += vals[e] * x[raw[e][1]] * x[raw[e][2]];
  EXPECT_LT((t.contract(x, x) - ref).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SymTensor, ContractionIsSymmetricInArguments) {
  std::mt19937 rng(11);
  const MechModel m = random_model(5, rng);
  const Vec x = random_vec(5, rng), y = random_vec(5, rng), z = random_vec(5, rng);
  EXPECT_LT((m.T2.contract(x, y) - m.T2.contract(y, x)).norm(), 1e-13);
  const Vec a = m.T3.contract(x, y, z);
  EXPECT_LT((a - m.T3.contract(y, z, x)).norm(), 1e-13);
  EXPECT_LT((a - m.T3.contract(z, y, x)).norm(), 1e-13);
}

TEST(SymTensor, Tensor4RawEntryMatchesDenseSum) {
  const int n = 3;
  SymTensor4 t(n);
  t.add_raw(0, 1, 2, 2, 0.7);
  t.add_raw(2, 0, 0, 1, -1.3);
  t.add_raw(1, 1, 1, 1, 0.4);
  t.compress();
  const Vec x = (Vec(3) << 0.3, -0.8, 1.1).finished();
  Vec ref = Vec::Zero(n);
  ref[0] += 0.7 * x[1] * x[2] * x[2];
  ref[2] += -1.3 * x[0] * x[0] * x[1];
  ref[1] += 0.4 * x[1] * x[1] * x[1];
  EXPECT_LT((t.contract(x, x, x) - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NonlinearForce, HomogeneousOfDegreeTwoAndThree) {
  std::mt19937 rng(3);
  MechModel m = random_model(6, rng);
  MechModel only2 = m, only3 = m;
  only2.T3 = SymTensor4(6);
  only3.T2 = SymTensor3(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = random_vec(6, rng);
    const double lam = 0.2 + 3.0 * std::abs(random_vec(1, rng)[0]);
    const Vec xs = lam * x;
    const Vec f2 = nonlinear_force(only2, x), f2s = nonlinear_force(only2, xs);
    const Vec f3 = nonlinear_force(only3, x), f3s = nonlinear_force(only3, xs);
    EXPECT_LT((f2s - lam * lam * f2).norm(), 1e-12 * (1.0 + f2s.norm()));
    EXPECT_LT((f3s - lam * lam * lam * f3).norm(), 1e-12 * (1.0 + f3s.norm()));
  }
}

TEST(NonlinearForce, TangentMatchesCentralDifference) {
  std::mt19937 rng(5);
  const MechModel m = random_model(4, rng);
  const Vec x = random_vec(4, rng), v = random_vec(4, rng);
  const double h = 1e-6;
  const Vec fd = (nonlinear_force(m, Vec(x + h * v)) - nonlinear_force(m, Vec(x - h * v))) / (2 * h);
  EXPECT_LT((nonlinear_force_jvp(m, x, v) - fd).norm(), 1e-8);
}

TEST(Damping, AssembledAsRayleighCombination) {
  std::mt19937 rng(9);
  const MechModel m = random_model(5, rng);
  const Mat C = assemble_damping(m);
  EXPECT_LE((C - (m.alpha * m.M + m.beta * m.K)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LightDamping, TableMatchesDampingRatio) {
  // Independent oracle: xi = (alpha + beta w^2) / (2 w) < 1.
  const double cases[][2] = {{0.0, 0.0}, {0.1, 0.0}, {0.0, 0.1}, {0.5, 0.5}, {2.0, 2.0}, {0.3, 0.01}};
  for (const auto& c : cases) {
    for (double w = 0.01; w < 50.0; w *= 1.37) {
      const double xi = (c[0] + c[1] * w * w) / (2 * w);
      EXPECT_EQ(check_light_damping(c[0], c[1], w).valid, xi < 1.0) << c[0] << " " << c[1] << " " << w;
    }
  }
}

TEST(LightDamping, RegionBounds) {
  const auto a = check_light_damping(0.1, 0.0, 1.0);
  EXPECT_NEAR(a.omega_lo, 0.05, 1e-15);
  EXPECT_TRUE(std::isinf(a.omega_hi));
  const auto b = check_light_damping(0.0, 0.1, 1.0);
  EXPECT_NEAR(b.omega_hi, 20.0, 1e-12);
  const auto c = check_light_damping(0.5, 0.5, 1.0);
  EXPECT_NEAR(c.omega_lo, (1 - std::sqrt(0.75)) / 0.5, 1e-12);
  EXPECT_NEAR(c.omega_hi, (1 + std::sqrt(0.75)) / 0.5, 1e-12);
  EXPECT_TRUE(check_light_damping(2.0, 2.0, 1.0).never_satisfied);
  EXPECT_FALSE(check_light_damping(2.0, 2.0, 1.0).valid);
}

TEST(FirstOrderForm, TrajectoryHasZeroResidual) {
  // Integrate the second-order equations, then check B z' = A z + F(z) with
  // z' from the first-order operators solved independently.
  const MechModel m = build_chain(ChainSpec::two_oscillators());
  const auto [B, A] = first_order_operators(m);
  const Mat C = assemble_damping(m);
  const int n = m.n;
  auto accel = [&](const Vec& x, const Vec& v) -> Vec {
    return m.M.llt().solve(Vec(-C * v - m.K * x - nonlinear_force(m, x)));
  };
  Vec x = (Vec(2) << 0.3, -0.2).finished(), v = (Vec(2) << 0.1, 0.25).finished();
  const double dt = 1e-3;
  double worst = 0.0;
  for (int step = 0; step < 2000; ++step) {
    // RK4 on (x, v).
    const Vec k1x = v, k1v = accel(x, v);
    const Vec k2x = v + 0.5 * dt * k1v, k2v = accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
    const Vec k3x = v + 0.5 * dt * k2v, k3v = accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
    const Vec k4x = v + dt * k3v, k4v = accel(x + dt * k3x, v + dt * k3v);
    x += dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (step % 100 != 0) continue;
    Vec z(2 * n), zdot(2 * n), F = Vec::Zero(2 * n);
    z << x, v;
    zdot << v, accel(x, v);
    F.head(n) = -nonlinear_force(m, x);
    worst = std::max(worst, (B * zdot - A * z - F).norm());
  }
  EXPECT_LT(worst, 1e-13);
}

TEST(MechModel, ValidateRejectsBrokenOperators) {
  MechModel m = build_chain(ChainSpec::two_oscillators());
  EXPECT_NO_THROW(m.validate());
  MechModel asym = m;
  asym.K(0, 1) += 0.1;
  EXPECT_THROW(asym.validate(), Error);
  MechModel indefinite = m;
  indefinite.M(0, 0) = -1.0;
  try {
    indefinite.validate();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidModel);
  }
}

TEST(Errors, CategoriesAndNames) {
  EXPECT_EQ(category(ErrorCode::InvalidConfig), ErrorCategory::Config);
  EXPECT_EQ(category(ErrorCode::LightDamping), ErrorCategory::Model);
  EXPECT_EQ(category(ErrorCode::TrackingLost), ErrorCategory::Model);
  EXPECT_EQ(category(ErrorCode::OuterResonance), ErrorCategory::Ssm);
  EXPECT_EQ(category(ErrorCode::AmplitudeUnreachable), ErrorCategory::Ssm);
  EXPECT_EQ(category(ErrorCode::NotConverged), ErrorCategory::Optimizer);
  EXPECT_STREQ(to_string(ErrorCode::LightDamping), "light-damping-violation");
}
