#include <array>
#include <cmath>
#include <numbers>

#include "ssmopt/error.hpp"
#include "ssmopt/models.hpp"

namespace ssmopt {

namespace {

constexpr int kNe = 6;  // element DOFs: (u, w, theta) per node

struct Gauss5 {
  std::array<double, 5> x;
  std::array<double, 5> w;
};

Gauss5 gauss5_unit() {
  const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
  const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
  const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
  const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
  const std::array<double, 5> xs{-b, -a, 0.0, a, b};
  const std::array<double, 5> ws{wb, wa, 128.0 / 225.0, wa, wb};
  Gauss5 g;
  for (int i = 0; i < 5; ++i) {
    g.x[i] = 0.5 * (xs[i] + 1.0);
    g.w[i] = 0.5 * ws[i];
  }
  return g;
}

struct ElementTensors {
  Eigen::Matrix<double, kNe, kNe> K, M;
  std::array<double, kNe * kNe * kNe> T2{};
  std::array<double, kNe * kNe * kNe * kNe> T3{};
};

inline int i3(int i, int j, int k) { return (i * kNe + j) * kNe + k; }
inline int i4(int i, int j, int k, int l) { return ((i * kNe + j) * kNe + k) * kNe + l; }

// Straight element in its local frame.
ElementTensors local_element(double l, double EA, double EI, double rhoA) {
  static const Gauss5 g = gauss5_unit();
  ElementTensors et;
  et.K.setZero();
  et.M.setZero();
  for (int q = 0; q < 5; ++q) {
    const double s = g.x[q];
    const double wq = g.w[q] * l;
    Eigen::Matrix<double, kNe, 1> Bu, Gw, Hw, Nu, Nw;
    Bu.setZero();
    Gw.setZero();
    Hw.setZero();
    Nu.setZero();
    Nw.setZero();
    Bu[0] = -1.0 / l;
    Bu[3] = 1.0 / l;
    Nu[0] = 1.0 - s;
    Nu[3] = s;
    Nw[1] = 1.0 - 3.0 * s * s + 2.0 * s * s * s;
    Nw[2] = l * (s - 2.0 * s * s + s * s * s);
    Nw[4] = 3.0 * s * s - 2.0 * s * s * s;
    Nw[5] = l * (-s * s + s * s * s);
    Gw[1] = (-6.0 * s + 6.0 * s * s) / l;
    Gw[2] = 1.0 - 4.0 * s + 3.0 * s * s;
    Gw[4] = (6.0 * s - 6.0 * s * s) / l;
    Gw[5] = -2.0 * s + 3.0 * s * s;
    Hw[1] = (-6.0 + 12.0 * s) / (l * l);
    Hw[2] = (-4.0 + 6.0 * s) / l;
    Hw[4] = (6.0 - 12.0 * s) / (l * l);
    Hw[5] = (-2.0 + 6.0 * s) / l;

    et.K += wq * (EA * Bu * Bu.transpose() + EI * Hw * Hw.transpose());
    et.M += wq * rhoA * (Nu * Nu.transpose() + Nw * Nw.transpose());
    // U3 = EA/2 int u' w'^2, U4 = EA/8 int w'^4
    for (int i = 0; i < kNe; ++i)
      for (int j = 0; j < kNe; ++j)
        for (int k = 0; k < kNe; ++k) {
          et.T2[i3(i, j, k)] +=
              wq * 0.5 * EA * (Bu[i] * Gw[j] * Gw[k] + Gw[i] * (Bu[j] * Gw[k] + Bu[k] * Gw[j]));
          const double c3 = wq * 0.5 * EA * Gw[i] * Gw[j] * Gw[k];
          if (c3 != 0.0)
            for (int m = 0; m < kNe; ++m) et.T3[i4(i, j, k, m)] += c3 * Gw[m];
        }
  }
  return et;
}

void rotate(ElementTensors& et, double c, double s) {
  Eigen::Matrix<double, kNe, kNe> R = Eigen::Matrix<double, kNe, kNe>::Zero();
  for (int nd = 0; nd < 2; ++nd) {
    const int o = 3 * nd;
    R(o, o) = c;
    R(o, o + 1) = s;
    R(o + 1, o) = -s;
    R(o + 1, o + 1) = c;
    R(o + 2, o + 2) = 1.0;
  }
  et.K = R.transpose() * et.K * R;
  et.M = R.transpose() * et.M * R;
  // Contract each slot with R (local = R * global).
  std::array<double, kNe * kNe * kNe> t2 = et.T2, u2{};
  for (int slot = 0; slot < 3; ++slot) {
    u2.fill(0.0);
    for (int i = 0; i < kNe; ++i)
      for (int j = 0; j < kNe; ++j)
        for (int k = 0; k < kNe; ++k) {
          const double v = t2[i3(i, j, k)];
          if (v == 0.0) continue;
          for (int a = 0; a < kNe; ++a) {
            if (slot == 0 && R(i, a) != 0.0) u2[i3(a, j, k)] += R(i, a) * v;
            if (slot == 1 && R(j, a) != 0.0) u2[i3(i, a, k)] += R(j, a) * v;
            if (slot == 2 && R(k, a) != 0.0) u2[i3(i, j, a)] += R(k, a) * v;
          }
        }
    t2 = u2;
  }
  et.T2 = t2;
  std::array<double, kNe * kNe * kNe * kNe> t3 = et.T3, u3{};
  for (int slot = 0; slot < 4; ++slot) {
    u3.fill(0.0);
    for (int i = 0; i < kNe; ++i)
      for (int j = 0; j < kNe; ++j)
        for (int k = 0; k < kNe; ++k)
          for (int l = 0; l < kNe; ++l) {
            const double v = t3[i4(i, j, k, l)];
            if (v == 0.0) continue;
            for (int a = 0; a < kNe; ++a) {
              if (slot == 0 && R(i, a) != 0.0) u3[i4(a, j, k, l)] += R(i, a) * v;
              if (slot == 1 && R(j, a) != 0.0) u3[i4(i, a, k, l)] += R(j, a) * v;
              if (slot == 2 && R(k, a) != 0.0) u3[i4(i, j, a, l)] += R(k, a) * v;
              if (slot == 3 && R(l, a) != 0.0) u3[i4(i, j, k, a)] += R(l, a) * v;
            }
          }
    t3 = u3;
  }
  et.T3 = t3;
}

double fd_step(double mu) { return 1e-6 * (1.0 + std::abs(mu)); }

}  // namespace

int VkBeamSpec::center_dof() const {
  if (n_elements % 2 != 0) fail(ErrorCode::InvalidArgument, "beam center is not a node for odd element counts");
  return 3 * (n_elements / 2 - 1) + 1;
}

double vk_get(const VkBeamSpec& s, const std::string& name) {
  if (name == "A1") return s.A1;
  if (name == "A2") return s.A2;
  if (name == "h") return s.h;
  if (name == "L") return s.L;
  if (name == "E") return s.E;
  if (name == "density") return s.density;
  fail(ErrorCode::InvalidConfig, "unknown beam parameter '" + name + "'");
}

void vk_set(VkBeamSpec& s, const std::string& name, double value) {
  if (name == "A1")
    s.A1 = value;
  else if (name == "A2")
    s.A2 = value;
  else if (name == "h")
    s.h = value;
  else if (name == "L")
    s.L = value;
  else if (name == "E")
    s.E = value;
  else if (name == "density")
    s.density = value;
  else
    fail(ErrorCode::InvalidConfig, "unknown beam parameter '" + name + "'");
}

MechModel assemble_vk_beam(const VkBeamSpec& spec) {
  if (spec.n_elements < 2) fail(ErrorCode::InvalidModel, "beam needs at least two elements");
  if (!(spec.h > 0.0)) fail(ErrorCode::InvalidModel, "beam thickness must be positive");
  if (!(spec.L > 0.0)) fail(ErrorCode::InvalidModel, "beam length must be positive");
  if (!(spec.E > 0.0) || !(spec.density > 0.0)) fail(ErrorCode::InvalidModel, "material constants must be positive");
  const double b = spec.width > 0.0 ? spec.width : spec.h;
  const double A = b * spec.h;
  const double I = b * spec.h * spec.h * spec.h / 12.0;
  const int N = spec.n_elements;
  const int n = 3 * (N - 1);

  std::vector<double> xs(N + 1), ys(N + 1);
  for (int i = 0; i <= N; ++i) {
    xs[i] = spec.L * i / N;
    ys[i] = spec.A1 * std::sin(std::numbers::pi * xs[i] / spec.L) +
            spec.A2 * std::sin(2.0 * std::numbers::pi * xs[i] / spec.L);
  }

  MechModel mdl;
  mdl.n = n;
  mdl.M = Mat::Zero(n, n);
  mdl.K = Mat::Zero(n, n);
  mdl.alpha = spec.alpha;
  mdl.beta = spec.beta;
  mdl.T2 = SymTensor3(n);
  mdl.T3 = SymTensor4(n);

  for (int e = 0; e < N; ++e) {
    const double dx = xs[e + 1] - xs[e], dy = ys[e + 1] - ys[e];
    const double l = std::hypot(dx, dy);
    if (!(l > 0.0)) fail(ErrorCode::InvalidModel, "degenerate beam element");
    ElementTensors et = local_element(l, spec.E * A, spec.E * I, spec.density * A);
    rotate(et, dx / l, dy / l);

    std::array<int, kNe> map{};
    for (int a = 0; a < kNe; ++a) {
      const int node = e + a / 3;
      map[a] = (node == 0 || node == N) ? -1 : 3 * (node - 1) + a % 3;
    }
    double t2max = 0.0, t3max = 0.0;
    for (double v : et.T2) t2max = std::max(t2max, std::abs(v));
    for (double v : et.T3) t3max = std::max(t3max, std::abs(v));
    for (int a = 0; a < kNe; ++a) {
      if (map[a] < 0) continue;
      for (int c = 0; c < kNe; ++c) {
        if (map[c] < 0) continue;
        mdl.K(map[a], map[c]) += et.K(a, c);
        mdl.M(map[a], map[c]) += et.M(a, c);
        for (int d = c; d < kNe; ++d) {
          if (map[d] < 0) continue;
          const double v2 = et.T2[i3(a, c, d)];
          if (std::abs(v2) > 1e-14 * t2max) mdl.T2.add_component(map[a], map[c], map[d], v2);
          for (int f = d; f < kNe; ++f) {
            if (map[f] < 0) continue;
            const double v3 = et.T3[i4(a, c, d, f)];
            if (std::abs(v3) > 1e-14 * t3max) mdl.T3.add_component(map[a], map[c], map[d], map[f], v3);
          }
        }
      }
    }
  }
  mdl.K = 0.5 * (mdl.K + mdl.K.transpose()).eval();
  mdl.M = 0.5 * (mdl.M + mdl.M.transpose()).eval();
  mdl.T2.compress();
  mdl.T3.compress();
  return mdl;
}

MechModel build_vk_beam(const VkBeamSpec& spec) {
  MechModel mdl = assemble_vk_beam(spec);
  for (const auto& name : spec.params) {
    const double mu = vk_get(spec, name);
    const double h = fd_step(mu);
    VkBeamSpec sp = spec, sm = spec;
    vk_set(sp, name, mu + h);
    vk_set(sm, name, mu - h);
    const MechModel mp = assemble_vk_beam(sp);
    const MechModel mm = assemble_vk_beam(sm);
    ParamDerivative d;
    d.name = name;
    d.dM = ((mp.M - mm.M) / (2.0 * h)).sparseView(1.0, 0.0);
    d.dK = ((mp.K - mm.K) / (2.0 * h)).sparseView(1.0, 0.0);
    d.dT2 = SymTensor3::axpy(mp.T2, -1.0, mm.T2).scaled(1.0 / (2.0 * h));
    d.dT3 = SymTensor4::axpy(mp.T3, -1.0, mm.T3).scaled(1.0 / (2.0 * h));
    mdl.params.push_back(std::move(d));
  }
  mdl.validate();
  return mdl;
}

}  // namespace ssmopt
