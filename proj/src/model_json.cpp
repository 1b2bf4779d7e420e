#include <set>

#include "json.hpp"
#include "ssmopt/error.hpp"
#include "ssmopt/models.hpp"

namespace ssmopt {

namespace {

using nlohmann::json;

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, path + ": expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(ErrorCode::InvalidConfig, path + "." + it.key() + ": unknown key");
}

double get_number(const json& j, const std::string& key, const std::string& path, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) fail(ErrorCode::InvalidConfig, path + "." + key + ": expected a number");
  return j[key].get<double>();
}

std::vector<double> per_element(const json& j, const std::string& key, const std::string& path, int n,
                                double def) {
  if (!j.contains(key)) return std::vector<double>(n, def);
  const json& v = j[key];
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    fail(ErrorCode::InvalidConfig, path + "." + key + ": expected a number or an array of length " + std::to_string(n));
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(ErrorCode::InvalidConfig, path + "." + key + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(ErrorCode::InvalidConfig, path + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) fail(ErrorCode::InvalidConfig, path + ": expected an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

Mat dense_matrix(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    fail(ErrorCode::InvalidConfig, path + ": expected an n x n array");
  Mat m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != n)
      fail(ErrorCode::InvalidConfig, path + ": expected an n x n array");
    for (int c = 0; c < n; ++c) {
      if (!j[r][c].is_number()) fail(ErrorCode::InvalidConfig, path + ": expected numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

SymTensor3 tensor3(const json& j, int n, const std::string& path) {
  SymTensor3 t(n);
  if (!j.is_array()) fail(ErrorCode::InvalidConfig, path + ": expected a list of [i,j,k,v]");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 4) fail(ErrorCode::InvalidConfig, path + ": expected entries [i,j,k,v]");
    try {
      t.add_raw(e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<double>());
    } catch (const Error& err) {
      fail(ErrorCode::InvalidConfig, path + ": " + err.what());
    } catch (const json::exception&) {
      fail(ErrorCode::InvalidConfig, path + ": expected entries [i,j,k,v]");
    }
  }
  t.compress();
  return t;
}

SymTensor4 tensor4(const json& j, int n, const std::string& path) {
  SymTensor4 t(n);
  if (!j.is_array()) fail(ErrorCode::InvalidConfig, path + ": expected a list of [i,j,k,l,v]");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 5) fail(ErrorCode::InvalidConfig, path + ": expected entries [i,j,k,l,v]");
    try {
      t.add_raw(e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>(), e[4].get<double>());
    } catch (const Error& err) {
      fail(ErrorCode::InvalidConfig, path + ": " + err.what());
    } catch (const json::exception&) {
      fail(ErrorCode::InvalidConfig, path + ": expected entries [i,j,k,l,v]");
    }
  }
  t.compress();
  return t;
}

std::unique_ptr<ModelFactory> chain_from_json(const json& j, const std::string& path) {
  allow_keys(j, path, {"type", "n", "m", "k", "k2", "k3", "alphaR", "betaR", "potential", "params"});
  const int n = static_cast<int>(get_number(j, "n", path, 2));
  if (n < 1) fail(ErrorCode::InvalidConfig, path + ".n: must be >= 1");
  ChainSpec s;
  s.m = per_element(j, "m", path, n, 1.0);
  s.k = per_element(j, "k", path, n, 1.0);
  s.k2 = per_element(j, "k2", path, n, 0.0);
  s.k3 = per_element(j, "k3", path, n, 0.0);
  s.alpha = get_number(j, "alphaR", path, 0.0);
  s.beta = get_number(j, "betaR", path, 0.0);
  if (j.contains("potential")) {
    if (!j["potential"].is_boolean()) fail(ErrorCode::InvalidConfig, path + ".potential: expected a boolean");
    s.potential = j["potential"].get<bool>();
  }
  if (j.contains("params")) s.params = string_list(j["params"], path + ".params");
  try {
    return std::make_unique<ChainFactory>(s);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, path + ".params: " + e.what());
  }
}

std::unique_ptr<ModelFactory> beam_from_json(const json& j, const std::string& path) {
  allow_keys(j, path,
             {"type", "nElements", "L", "h", "width", "A1", "A2", "E", "nu", "density", "alphaR", "betaR", "params"});
  VkBeamSpec s;
  s.n_elements = static_cast<int>(get_number(j, "nElements", path, s.n_elements));
  s.L = get_number(j, "L", path, s.L);
  s.h = get_number(j, "h", path, s.h);
  s.width = get_number(j, "width", path, s.width);
  s.A1 = get_number(j, "A1", path, s.A1);
  s.A2 = get_number(j, "A2", path, s.A2);
  s.E = get_number(j, "E", path, s.E);
  s.nu = get_number(j, "nu", path, s.nu);
  s.density = get_number(j, "density", path, s.density);
  s.alpha = get_number(j, "alphaR", path, 0.0);
  s.beta = get_number(j, "betaR", path, 0.0);
  if (j.contains("params")) s.params = string_list(j["params"], path + ".params");
  try {
    return std::make_unique<VkBeamFactory>(s);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidConfig, path + ".params: " + e.what());
  }
}

std::unique_ptr<ModelFactory> matrix_from_json(const json& j, const std::string& path) {
  allow_keys(j, path, {"type", "n", "M", "K", "alphaR", "betaR", "T2", "T3", "params"});
  if (!j.contains("n") || !j["n"].is_number_integer()) fail(ErrorCode::InvalidConfig, path + ".n: required integer");
  const int n = j["n"].get<int>();
  if (n < 1) fail(ErrorCode::InvalidConfig, path + ".n: must be >= 1");
  if (!j.contains("M") || !j.contains("K")) fail(ErrorCode::InvalidConfig, path + ": M and K are required");
  MechModel m;
  m.n = n;
  m.M = dense_matrix(j["M"], n, path + ".M");
  m.K = dense_matrix(j["K"], n, path + ".K");
  m.alpha = get_number(j, "alphaR", path, 0.0);
  m.beta = get_number(j, "betaR", path, 0.0);
  m.T2 = j.contains("T2") ? tensor3(j["T2"], n, path + ".T2") : SymTensor3(n);
  m.T3 = j.contains("T3") ? tensor4(j["T3"], n, path + ".T3") : SymTensor4(n);
  Vec mu0(0);
  if (j.contains("params")) {
    const json& ps = j["params"];
    if (!ps.is_array()) fail(ErrorCode::InvalidConfig, path + ".params: expected an array");
    mu0.resize(ps.size());
    for (std::size_t p = 0; p < ps.size(); ++p) {
      const std::string pp = path + ".params[" + std::to_string(p) + "]";
      allow_keys(ps[p], pp, {"name", "value", "dM", "dK", "dT2", "dT3"});
      if (!ps[p].contains("name") || !ps[p]["name"].is_string())
        fail(ErrorCode::InvalidConfig, pp + ".name: required string");
      ParamDerivative d;
      d.name = ps[p]["name"].get<std::string>();
      mu0[p] = get_number(ps[p], "value", pp, 0.0);
      d.dM = ps[p].contains("dM") ? SpMat(dense_matrix(ps[p]["dM"], n, pp + ".dM").sparseView(1.0, 0.0)) : SpMat(n, n);
      d.dK = ps[p].contains("dK") ? SpMat(dense_matrix(ps[p]["dK"], n, pp + ".dK").sparseView(1.0, 0.0)) : SpMat(n, n);
      d.dT2 = ps[p].contains("dT2") ? tensor3(ps[p]["dT2"], n, pp + ".dT2") : SymTensor3(n);
      d.dT3 = ps[p].contains("dT3") ? tensor4(ps[p]["dT3"], n, pp + ".dT3") : SymTensor4(n);
      m.params.push_back(std::move(d));
    }
  }
  return std::make_unique<MatrixFactory>(std::move(m), mu0);
}

}  // namespace

std::unique_ptr<ModelFactory> model_from_json(const std::string& text, const std::string& path) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    fail(ErrorCode::InvalidConfig, path + ".type: required string");
  const std::string type = j["type"].get<std::string>();
  if (type == "chain") return chain_from_json(j, path);
  if (type == "vk_beam") return beam_from_json(j, path);
  if (type == "matrix") return matrix_from_json(j, path);
  if (type == "catalog") {
    allow_keys(j, path, {"type", "name"});
    if (!j.contains("name") || !j["name"].is_string()) fail(ErrorCode::InvalidConfig, path + ".name: required string");
    return make_catalog_model(j["name"].get<std::string>());
  }
  fail(ErrorCode::InvalidConfig, path + ".type: unknown model type '" + type + "'");
}

std::string model_to_json(const MechModel& model, const Vec& mu0) {
  auto mat = [](const Mat& m) {
    json a = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      a.push_back(row);
    }
    return a;
  };
  auto t3 = [](const SymTensor3& t) {
    json a = json::array();
    for (const auto& e : t.entries()) {
      // Emit both orderings so that raw ingestion reproduces the component.
      if (e.j == e.k)
        a.push_back({e.i, e.j, e.k, e.v});
      else
        a.push_back({e.i, e.j, e.k, 2.0 * e.v});
    }
    return a;
  };
  auto t4 = [](const SymTensor4& t) {
    json a = json::array();
    std::array<std::array<int, 3>, 6> p;
    for (const auto& e : t.entries()) {
      const int np = SymTensor4::permutations(e.j, e.k, e.l, p);
      a.push_back({e.i, e.j, e.k, e.l, np * e.v});
    }
    return a;
  };
  json j;
  j["type"] = "matrix";
  j["n"] = model.n;
  j["M"] = mat(model.M);
  j["K"] = mat(model.K);
  j["alphaR"] = model.alpha;
  j["betaR"] = model.beta;
  j["T2"] = t3(model.T2);
  j["T3"] = t4(model.T3);
  json ps = json::array();
  for (int p = 0; p < model.param_count(); ++p) {
    const auto& d = model.params[p];
    ps.push_back({{"name", d.name},
                  {"value", p < mu0.size() ? mu0[p] : 0.0},
                  {"dM", mat(Mat(d.dM))},
                  {"dK", mat(Mat(d.dK))},
                  {"dT2", t3(d.dT2)},
                  {"dT3", t4(d.dT3)}});
  }
  j["params"] = ps;
  return j.dump();
}

}  // namespace ssmopt
