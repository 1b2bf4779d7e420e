#include "ssmopt/models.hpp"

#include <random>

#include "ssmopt/error.hpp"

namespace ssmopt {

namespace {

struct ParamRef {
  std::string kind;  // m, k, k2, k3
  int element = -1;  // -1: all elements
};

ParamRef parse_chain_param(const std::string& id, int n) {
  ParamRef r;
  const auto colon = id.find(':');
  r.kind = id.substr(0, colon);
  if (r.kind != "m" && r.kind != "k" && r.kind != "k2" && r.kind != "k3")
    fail(ErrorCode::InvalidConfig, "unknown chain parameter '" + id + "'");
  if (colon != std::string::npos) {
    try {
      r.element = std::stoi(id.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidConfig, "bad element index in chain parameter '" + id + "'");
    }
    if (r.element < 0 || r.element >= n) fail(ErrorCode::InvalidConfig, "chain parameter '" + id + "' out of range");
  }
  return r;
}

std::vector<double>& chain_field(ChainSpec& s, const std::string& kind) {
  if (kind == "m") return s.m;
  if (kind == "k") return s.k;
  if (kind == "k2") return s.k2;
  return s.k3;
}

const std::vector<double>& chain_field(const ChainSpec& s, const std::string& kind) {
  return chain_field(const_cast<ChainSpec&>(s), kind);
}

// Adds the force polynomial of spring s with unit coefficients scaled by c.
void add_spring_linear(std::vector<Eigen::Triplet<double>>& t, int s, double c) {
  const int b = s, a = s - 1;
  t.emplace_back(b, b, c);
  if (a >= 0) {
    t.emplace_back(a, a, c);
    t.emplace_back(a, b, -c);
    t.emplace_back(b, a, -c);
  }
}

void add_spring_quadratic(SymTensor3& T, int s, double c, bool potential) {
  const int b = s, a = s - 1;
  if (a < 0) {
    T.add_raw(b, b, b, c);
    return;
  }
  // (x_a - x_b)^2 = x_a^2 - 2 x_a x_b + x_b^2
  const double sa = potential ? -c : c;
  for (int i : {a, b}) {
    const double ci = i == a ? sa : c;
    T.add_raw(i, a, a, ci);
    T.add_raw(i, a, b, -2.0 * ci);
    T.add_raw(i, b, b, ci);
  }
}

void add_spring_cubic(SymTensor4& T, int s, double c) {
  const int b = s, a = s - 1;
  if (a < 0) {
    T.add_raw(b, b, b, b, c);
    return;
  }
  // f_a = c (x_a - x_b)^3, f_b = -f_a
  for (int i : {a, b}) {
    const double ci = i == a ? c : -c;
    T.add_raw(i, a, a, a, ci);
    T.add_raw(i, a, a, b, -3.0 * ci);
    T.add_raw(i, a, b, b, 3.0 * ci);
    T.add_raw(i, b, b, b, -ci);
  }
}

SpMat from_triplets(int n, const std::vector<Eigen::Triplet<double>>& t) {
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

ChainSpec ChainSpec::uniform(int n, double m, double k, double k2, double k3, double alpha, double beta) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "chain needs at least one mass");
  ChainSpec s;
  s.m.assign(n, m);
  s.k.assign(n, k);
  s.k2.assign(n, k2);
  s.k3.assign(n, k3);
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

ChainSpec ChainSpec::two_oscillators() { return uniform(2, 1.0, 1.0, 0.5, 0.2, 0.0, 0.1); }

ChainSpec ChainSpec::bench(int n, int n_params, unsigned seed) {
  ChainSpec s = uniform(n, 1.0, 1.0, 0.1, 0.05, 0.0, 0.1);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.6, 1.4);
  for (int i = 0; i < n; ++i) {
    s.m[i] = u(rng);
    s.k[i] = u(rng);
    s.k2[i] = 0.1 * u(rng);
    s.k3[i] = 0.05 * u(rng);
  }
  if (n_params > 4 * n) fail(ErrorCode::InvalidArgument, "too many parameters for the bench chain");
  static const char* kinds[] = {"k", "k2", "k3", "m"};
  s.params.clear();
  for (int p = 0; p < n_params; ++p) s.params.push_back(std::string(kinds[p % 4]) + ":" + std::to_string(p / 4));
  return s;
}

MechModel build_chain(const ChainSpec& spec) {
  const int n = spec.size();
  if (n < 1) fail(ErrorCode::InvalidModel, "chain needs at least one mass");
  if (static_cast<int>(spec.k.size()) != n || static_cast<int>(spec.k2.size()) != n ||
      static_cast<int>(spec.k3.size()) != n)
    fail(ErrorCode::InvalidModel, "chain spring arrays must match the number of masses");
  for (int i = 0; i < n; ++i) {
    if (!(spec.m[i] > 0.0)) fail(ErrorCode::InvalidModel, "chain masses must be positive");
    if (!(spec.k[i] >= 0.0)) fail(ErrorCode::InvalidModel, "chain linear stiffness must be nonnegative");
  }

  MechModel mdl;
  mdl.n = n;
  mdl.alpha = spec.alpha;
  mdl.beta = spec.beta;
  mdl.M = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) mdl.M(i, i) = spec.m[i];
  std::vector<Eigen::Triplet<double>> kt;
  mdl.T2 = SymTensor3(n);
  mdl.T3 = SymTensor4(n);
  for (int s = 0; s < n; ++s) {
    add_spring_linear(kt, s, spec.k[s]);
    if (spec.k2[s] != 0.0) add_spring_quadratic(mdl.T2, s, spec.k2[s], spec.potential);
    if (spec.k3[s] != 0.0) add_spring_cubic(mdl.T3, s, spec.k3[s]);
  }
  mdl.K = Mat(from_triplets(n, kt));
  mdl.T2.compress();
  mdl.T3.compress();

  for (const auto& id : spec.params) {
    const ParamRef r = parse_chain_param(id, n);
    ParamDerivative d;
    d.name = id;
    d.dM = SpMat(n, n);
    d.dK = SpMat(n, n);
    d.dT2 = SymTensor3(n);
    d.dT3 = SymTensor4(n);
    std::vector<Eigen::Triplet<double>> t;
    for (int e = 0; e < n; ++e) {
      if (r.element >= 0 && e != r.element) continue;
      if (r.kind == "m")
        t.emplace_back(e, e, 1.0);
      else if (r.kind == "k")
        add_spring_linear(t, e, 1.0);
      else if (r.kind == "k2")
        add_spring_quadratic(d.dT2, e, 1.0, spec.potential);
      else
        add_spring_cubic(d.dT3, e, 1.0);
    }
    if (r.kind == "m") d.dM = from_triplets(n, t);
    if (r.kind == "k") d.dK = from_triplets(n, t);
    d.dT2.compress();
    d.dT3.compress();
    mdl.params.push_back(std::move(d));
  }
  mdl.validate();
  return mdl;
}

Vec chain_force(const ChainSpec& spec, const Vec& x) {
  const int n = spec.size();
  Vec f = Vec::Zero(n);
  for (int s = 0; s < n; ++s) {
    if (s == 0) {
      f[0] += spec.k2[0] * x[0] * x[0] + spec.k3[0] * x[0] * x[0] * x[0];
      continue;
    }
    const int a = s - 1, b = s;
    const double d = x[a] - x[b];
    f[a] += (spec.potential ? -1.0 : 1.0) * spec.k2[s] * d * d + spec.k3[s] * d * d * d;
    f[b] += spec.k2[s] * d * d - spec.k3[s] * d * d * d;
  }
  return f;
}

ChainFactory::ChainFactory(ChainSpec spec) : spec_(std::move(spec)) {
  for (const auto& id : spec_.params) parse_chain_param(id, spec_.size());
}

Vec ChainFactory::design_values() const {
  Vec v(spec_.params.size());
  for (std::size_t p = 0; p < spec_.params.size(); ++p) {
    const ParamRef r = parse_chain_param(spec_.params[p], spec_.size());
    v[p] = chain_field(spec_, r.kind)[r.element < 0 ? 0 : r.element];
  }
  return v;
}

MechModel ChainFactory::build(const Vec& mu) const {
  if (mu.size() != static_cast<int>(spec_.params.size()))
    fail(ErrorCode::InvalidArgument, "design vector has wrong size");
  ChainSpec s = spec_;
  for (std::size_t p = 0; p < s.params.size(); ++p) {
    const ParamRef r = parse_chain_param(s.params[p], s.size());
    auto& field = chain_field(s, r.kind);
    if (r.element < 0)
      std::fill(field.begin(), field.end(), mu[p]);
    else
      field[r.element] = mu[p];
  }
  return build_chain(s);
}

VkBeamFactory::VkBeamFactory(VkBeamSpec spec) : spec_(std::move(spec)) {
  for (const auto& id : spec_.params) vk_get(spec_, id);
}

Vec VkBeamFactory::design_values() const {
  Vec v(spec_.params.size());
  for (std::size_t p = 0; p < spec_.params.size(); ++p) v[p] = vk_get(spec_, spec_.params[p]);
  return v;
}

MechModel VkBeamFactory::build(const Vec& mu) const {
  if (mu.size() != static_cast<int>(spec_.params.size()))
    fail(ErrorCode::InvalidArgument, "design vector has wrong size");
  VkBeamSpec s = spec_;
  for (std::size_t p = 0; p < s.params.size(); ++p) vk_set(s, s.params[p], mu[p]);
  return build_vk_beam(s);
}

MatrixFactory::MatrixFactory(MechModel base, Vec mu0) : base_(std::move(base)), mu0_(std::move(mu0)) {
  if (mu0_.size() != base_.param_count())
    fail(ErrorCode::InvalidModel, "parameter values do not match the derivative list");
  base_.validate();
}

std::vector<std::string> MatrixFactory::design_names() const {
  std::vector<std::string> out;
  for (const auto& p : base_.params) out.push_back(p.name);
  return out;
}

MechModel MatrixFactory::build(const Vec& mu) const {
  if (mu.size() != mu0_.size()) fail(ErrorCode::InvalidArgument, "design vector has wrong size");
  MechModel m = base_;
  for (int p = 0; p < mu.size(); ++p) {
    const double d = mu[p] - mu0_[p];
    if (d == 0.0) continue;
    const auto& pd = base_.params[p];
    m.M += d * Mat(pd.dM);
    m.K += d * Mat(pd.dK);
    if (!pd.dT2.empty()) m.T2 = SymTensor3::axpy(m.T2.size() ? m.T2 : SymTensor3(m.n), d, pd.dT2);
    if (!pd.dT3.empty()) m.T3 = SymTensor4::axpy(m.T3.size() ? m.T3 : SymTensor4(m.n), d, pd.dT3);
  }
  m.validate();
  return m;
}

std::vector<std::string> model_catalog() { return {"chain2", "duffing1", "vk_beam"}; }

std::unique_ptr<ModelFactory> make_catalog_model(const std::string& name) {
  if (name == "chain2") return std::make_unique<ChainFactory>(ChainSpec::two_oscillators());
  if (name == "duffing1") {
    ChainSpec s = ChainSpec::uniform(1, 1.0, 1.0, 0.0, 0.1, 0.0, 0.0);
    s.params = {"k", "k3"};
    return std::make_unique<ChainFactory>(s);
  }
  if (name == "vk_beam") return std::make_unique<VkBeamFactory>(VkBeamSpec{});
  fail(ErrorCode::InvalidConfig, "unknown catalog model '" + name + "'");
}

}  // namespace ssmopt
