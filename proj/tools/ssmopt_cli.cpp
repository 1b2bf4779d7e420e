#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssmopt/ssmopt.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kModel = 2, kSsm = 3, kNotConverged = 4, kVerifyFailed = 5 };

// Carries an exit code out of a subcommand.
struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void config_error(const std::string& msg) { throw CliError{kConfig, msg}; }

void check(ssmopt_status s, const std::string& context) {
  if (s == SSMOPT_OK) return;
  const int cls = ssmopt_status_class(s);
  throw CliError{cls, context + ": " + ssmopt_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  ssmopt_string_free(s);
  return out;
}

struct Options {
  std::string config;
  std::string out = ".";
  bool verify_fd = false;
  std::string order;  // "", "auto" or an integer
  std::optional<double> eps_tol;
};

struct ModelHandle {
  ssmopt_model* p = nullptr;
  ModelHandle() = default;
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
  ~ModelHandle() { ssmopt_model_free(p); }
};

struct ExpansionHandle {
  ssmopt_expansion* p = nullptr;
  ExpansionHandle() = default;
  ExpansionHandle(const ExpansionHandle&) = delete;
  ExpansionHandle& operator=(const ExpansionHandle&) = delete;
  ~ExpansionHandle() { ssmopt_expansion_free(p); }
};

json load_config(const Options& o) {
  if (o.config.empty()) return json::object();
  std::ifstream in(o.config);
  if (!in) config_error("cannot open config file '" + o.config + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error(o.config + ": " + e.what());
  }
  if (!j.is_object()) config_error("config: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const std::vector<std::string> keys{"model", "backbone", "sens", "verify", "optimize", "bench"};
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) config_error(it.key() + ": unknown key");
  }
  return j;
}

void allow_keys(const json& j, const std::string& path, const std::vector<std::string>& keys) {
  if (!j.is_object()) config_error(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) config_error(path + "." + it.key() + ": unknown key");
}

double get_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_error(path + "." + key + ": expected a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) config_error(path + "." + key + ": expected an integer");
  return j[key].get<int>();
}

std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) config_error(path + "." + key + ": required");
  const json& a = j[key];
  std::vector<double> v;
  if (a.is_number()) return {a.get<double>()};
  if (!a.is_array()) config_error(path + "." + key + ": expected a number or an array of numbers");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) config_error(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
    v.push_back(a[i].get<double>());
  }
  return v;
}

// Expansion order settings shared by backbone and sens.
struct OrderSpec {
  bool automatic = false;
  int order = 5;
  double eps_tol = 1e-3;
  int min_order = 3;
  int max_order = 9;
};

OrderSpec order_spec(const json& block, const std::string& path, const Options& o) {
  OrderSpec s;
  if (block.contains("order")) {
    const json& v = block["order"];
    if (v.is_string() && v.get<std::string>() == "auto") s.automatic = true;
    else if (v.is_number_integer()) s.order = v.get<int>();
    else config_error(path + ".order: expected an odd integer or \"auto\"");
  }
  s.eps_tol = get_number(block, "epsTol", path, s.eps_tol);
  s.min_order = get_int(block, "minOrder", path, s.min_order);
  s.max_order = get_int(block, "maxOrder", path, s.max_order);
  if (!o.order.empty()) {
    if (o.order == "auto") {
      s.automatic = true;
    } else {
      try {
        std::size_t pos = 0;
        s.order = std::stoi(o.order, &pos);
        if (pos != o.order.size()) throw std::invalid_argument("trailing characters");
        s.automatic = false;
      } catch (const std::exception&) {
        config_error("--order: expected an integer or \"auto\"");
      }
    }
  }
  if (o.eps_tol) s.eps_tol = *o.eps_tol;
  if (!(s.eps_tol > 0.0)) config_error(path + ".epsTol: must be positive");
  return s;
}

void load_model(const json& cfg, ModelHandle& m) {
  if (!cfg.contains("model")) config_error("model: required");
  check(ssmopt_model_from_json(cfg["model"].dump().c_str(), &m.p), "model");
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw CliError{kConfig, "cannot write '" + p.string() + "'"};
  f << text;
}

fs::path out_dir(const Options& o) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw CliError{kConfig, "cannot create output directory '" + o.out + "'"};
  return fs::path(o.out);
}

// Builds the expansion per the order settings; returns the adaptation history.
json make_expansion(const ModelHandle& m, int mode, int dof, double x_max, const OrderSpec& s, ExpansionHandle& e) {
  json history = json::array();
  if (s.automatic) {
    char* h = nullptr;
    int converged = 0;
    check(ssmopt_expansion_adapt(m.p, mode, dof, x_max, s.eps_tol, s.min_order, s.max_order, &e.p, &converged, &h),
          "ssm");
    history = json::parse(take(h));
    for (const auto& step : history)
      std::fprintf(stderr, "order %d: epsilon = %.3e\n", step["order"].get<int>(), step["epsilon"].get<double>());
    if (!converged)
      std::fprintf(stderr, "warning: epsilon above %.3e at maximum order %d\n", s.eps_tol, s.max_order);
  } else {
    check(ssmopt_expansion_compute(m.p, mode, s.order, &e.p), "ssm");
  }
  return history;
}

int cmd_backbone(const Options& o) {
  const json cfg = load_config(o);
  if (!cfg.contains("backbone")) config_error("backbone: required");
  const json& b = cfg["backbone"];
  allow_keys(b, "backbone", {"mode", "dof", "x", "order", "epsTol", "minOrder", "maxOrder"});
  const int mode = get_int(b, "mode", "backbone", 0);
  const int dof = get_int(b, "dof", "backbone", -1);
  const std::vector<double> x = get_numbers(b, "x", "backbone");
  if (x.empty()) config_error("backbone.x: at least one amplitude required");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > 0.0) || (i > 0 && x[i] < x[i - 1])) config_error("backbone.x: amplitudes must be positive and ascending");
  const OrderSpec s = order_spec(b, "backbone", o);

  ModelHandle m;
  load_model(cfg, m);
  ExpansionHandle e;
  const json history = make_expansion(m, mode, dof, x.back(), s, e);
  int order = 0;
  check(ssmopt_expansion_order(e.p, &order), "ssm");

  char* csv = nullptr;
  check(ssmopt_backbone_csv(e.p, dof, x.data(), x.size(), &csv), "backbone");
  char* expj = nullptr;
  check(ssmopt_expansion_to_json(e.p, &expj), "ssm");

  json report;
  report["order"] = order;
  report["epsTol"] = s.eps_tol;
  report["adaptation"] = history;
  json pts = json::array();
  for (double xi : x) {
    double rho = 0.0, eps = 0.0;
    check(ssmopt_rho_of_x(e.p, dof, xi, &rho), "backbone");
    check(ssmopt_invariance_error(e.p, rho, &eps), "ssm");
    pts.push_back({{"x", xi}, {"rho", rho}, {"epsilon", eps}});
  }
  report["targets"] = pts;

  const fs::path dir = out_dir(o);
  write_file(dir / "backbone.csv", take(csv));
  write_file(dir / "expansion.json", take(expj));
  write_file(dir / "error.json", report.dump(2));
  std::printf("backbone: %zu points at order %d -> %s\n", x.size(), order, dir.string().c_str());
  return kOk;
}

std::vector<std::string> param_names(const ModelHandle& m, int np) {
  std::vector<std::string> names;
  for (int p = 0; p < np; ++p) {
    char* s = nullptr;
    check(ssmopt_model_param_name(m.p, p, &s), "model");
    names.push_back(take(s));
  }
  return names;
}

int cmd_sens(const Options& o) {
  const json cfg = load_config(o);
  if (!cfg.contains("sens")) config_error("sens: required");
  const json& b = cfg["sens"];
  allow_keys(b, "sens", {"mode", "dof", "x", "order", "epsTol", "minOrder", "maxOrder", "methods"});
  const int mode = get_int(b, "mode", "sens", 0);
  const int dof = get_int(b, "dof", "sens", -1);
  const double x0 = get_number(b, "x", "sens", 0.0);
  if (!(x0 > 0.0)) config_error("sens.x: positive amplitude required");
  std::vector<std::string> methods{"adjoint", "direct"};
  if (b.contains("methods")) {
    methods.clear();
    if (!b["methods"].is_array()) config_error("sens.methods: expected an array");
    for (const auto& v : b["methods"]) {
      if (!v.is_string() || (v != "adjoint" && v != "direct"))
        config_error("sens.methods: expected \"adjoint\" or \"direct\" entries");
      methods.push_back(v.get<std::string>());
    }
    if (methods.empty()) config_error("sens.methods: at least one method required");
  }
  const OrderSpec s = order_spec(b, "sens", o);

  ModelHandle m;
  load_model(cfg, m);
  int n = 0, np = 0;
  check(ssmopt_model_info(m.p, &n, &np, nullptr), "model");
  if (np == 0) config_error("model: no parameters declared");
  ExpansionHandle e;
  make_expansion(m, mode, dof, x0, s, e);
  int order = 0;
  check(ssmopt_expansion_order(e.p, &order), "ssm");

  const fs::path dir = out_dir(o);
  std::vector<std::pair<std::string, std::vector<double>>> grads;
  for (const auto& method : methods) {
    const ssmopt_method id = method == "adjoint" ? SSMOPT_ADJOINT : SSMOPT_DIRECT;
    std::vector<double> g(np);
    double omega = 0.0, seconds = 0.0;
    check(ssmopt_sensitivity(e.p, dof, x0, id, &omega, g.data(), &seconds), method);
    char* rep = nullptr;
    check(ssmopt_sensitivity_json(e.p, dof, x0, id, &rep), method);
    write_file(dir / ("sens_" + method + ".json"), take(rep));
    std::printf("%s: Omega = %.12g, %d parameters, %.3e s\n", method.c_str(), omega, np, seconds);
    grads.emplace_back(method, std::move(g));
  }
  if (grads.size() == 2)
    std::printf("adjoint vs direct max relative error: %.3e\n",
                ssmopt_max_relative_error(grads[0].second.data(), grads[1].second.data(), np));

  if (o.verify_fd) {
    std::vector<double> fd(np), ratio(np);
    check(ssmopt_sensitivity_fd(m.p, mode, order, dof, x0, fd.data(), ratio.data()), "finite differences");
    const auto names = param_names(m, np);
    json j;
    json rows = json::array();
    for (int p = 0; p < np; ++p)
      rows.push_back({{"param", names[p]}, {"dOmega", fd[p]}, {"richardson", ratio[p]}, {"order", order}, {"x0", x0}});
    j["fd"] = rows;
    json errs = json::object();
    for (const auto& [method, g] : grads) {
      const double err = ssmopt_max_relative_error(g.data(), fd.data(), np);
      errs[method] = err;
      std::printf("%s vs finite differences max relative error: %.3e\n", method.c_str(), err);
    }
    j["maxRelativeError"] = errs;
    write_file(dir / "sens_fd.json", j.dump(2));
  }
  return kOk;
}

int cmd_verify(const Options& o) {
  const json cfg = load_config(o);
  json b = cfg.contains("verify") ? cfg["verify"] : json::object();
  allow_keys(b, "verify", {"order", "dof", "x", "models"});
  const int order = o.order.empty() || o.order == "auto" ? get_int(b, "order", "verify", 5) : std::stoi(o.order);
  const int dof = get_int(b, "dof", "verify", -1);
  const double x = get_number(b, "x", "verify", 0.0);

  std::vector<std::pair<std::string, std::string>> targets;  // label, catalog name ("" = config model)
  if (cfg.contains("model")) {
    targets.emplace_back("model", "");
  } else if (b.contains("models")) {
    if (!b["models"].is_array()) config_error("verify.models: expected an array of catalog names");
    for (const auto& v : b["models"]) {
      if (!v.is_string()) config_error("verify.models: expected catalog names");
      targets.emplace_back(v.get<std::string>(), v.get<std::string>());
    }
  } else {
    for (const char* name : {"chain2", "duffing1", "vk_beam"}) targets.emplace_back(name, name);
  }

  json all = json::object();
  int failures = 0;
  for (const auto& [label, name] : targets) {
    ModelHandle m;
    if (name.empty()) load_model(cfg, m);
    else check(ssmopt_model_catalog(name.c_str(), &m.p), "model");
    char* rep = nullptr;
    int failed = 0;
    check(ssmopt_verify(m.p, order, name.empty() ? dof : -1, name.empty() ? x : 0.0, &rep, &failed), "verify");
    const json checks = json::parse(take(rep));
    for (const auto& c : checks)
      std::printf("[%s] %-28s %s\n", label.c_str(), c["name"].get<std::string>().c_str(),
                  c["passed"].get<bool>() ? "PASS" : "FAIL");
    failures += failed;
    all[label] = checks;
  }
  json report = {{"failures", failures}, {"order", order}, {"results", all}};
  write_file(out_dir(o) / "verify.json", report.dump(2));
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? kOk : kVerifyFailed;
}

int cmd_optimize(const Options& o) {
  const json cfg = load_config(o);
  if (!cfg.contains("optimize")) config_error("optimize: required");
  ModelHandle m;
  load_model(cfg, m);
  char* summary = nullptr;
  char* trace = nullptr;
  const ssmopt_status s = ssmopt_optimize(m.p, cfg["optimize"].dump().c_str(), &summary, &trace);
  const fs::path dir = out_dir(o);
  if (summary) write_file(dir / "summary.json", take(summary));
  if (trace) write_file(dir / "trace.csv", take(trace));
  if (s == SSMOPT_NOT_CONVERGED && fs::exists(dir / "summary.json")) {
    std::fprintf(stderr, "optimize: %s\n", ssmopt_last_error());
    return kNotConverged;
  }
  check(s, "optimize");
  std::printf("optimize: converged -> %s\n", dir.string().c_str());
  return kOk;
}

int cmd_bench(const Options& o) {
  const json cfg = load_config(o);
  json b = cfg.contains("bench") ? cfg["bench"] : json::object();
  allow_keys(b, "bench", {"n", "params", "orders", "repeats", "x", "seed"});
  const int n = get_int(b, "n", "bench", 101);
  const int repeats = std::max(1, get_int(b, "repeats", "bench", 3));
  const unsigned seed = static_cast<unsigned>(get_int(b, "seed", "bench", 12345));
  std::vector<int> params{1, 10, 100}, orders{3, 5, 7};
  auto ints = [&](const char* key, std::vector<int>& v) {
    if (!b.contains(key)) return;
    v.clear();
    for (double d : get_numbers(b, key, "bench")) v.push_back(static_cast<int>(d));
  };
  ints("params", params);
  ints("orders", orders);
  if (!o.order.empty() && o.order != "auto") orders = {std::stoi(o.order)};

  std::string csv = "method,order,nparams,seconds\n";
  json summary = json::array();
  char line[160];
  for (int order : orders) {
    for (int np : params) {
      ModelHandle m;
      check(ssmopt_model_bench_chain(n, np, seed, &m.p), "model");
      ExpansionHandle e;
      check(ssmopt_expansion_compute(m.p, 0, order, &e.p), "ssm");
      double x0 = get_number(b, "x", "bench", 0.0);
      if (!(x0 > 0.0)) check(ssmopt_x_rms(e.p, -1, 0.05, &x0), "backbone");
      std::vector<double> g(np);
      double best[2] = {1e300, 1e300};
      for (int r = 0; r < repeats; ++r)
        for (int k = 0; k < 2; ++k) {
          double sec = 0.0;
          check(ssmopt_sensitivity(e.p, -1, x0, k == 0 ? SSMOPT_ADJOINT : SSMOPT_DIRECT, nullptr, g.data(), &sec),
                "sensitivity");
          best[k] = std::min(best[k], sec);
        }
      std::snprintf(line, sizeof line, "adjoint,%d,%d,%.17g\ndirect,%d,%d,%.17g\n", order, np, best[0], order, np,
                    best[1]);
      csv += line;
      summary.push_back({{"order", order}, {"nparams", np}, {"adjoint", best[0]}, {"direct", best[1]},
                         {"speedup", best[1] / best[0]}});
      std::printf("order %d, %3d params: adjoint %.3e s, direct %.3e s, speedup %.2f\n", order, np, best[0], best[1],
                  best[1] / best[0]);
    }
  }
  const fs::path dir = out_dir(o);
  write_file(dir / "bench.csv", csv);
  write_file(dir / "bench_summary.json", summary.dump(2));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backbone-curve computation, sensitivities and optimization on spectral submanifolds"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", o.config, "JSON configuration file");
    if (need_config) c->required();
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--order", o.order, "expansion order: odd integer or 'auto'");
    sub->add_option("--eps-tol", o.eps_tol, "invariance-error tolerance for order adaptation");
    sub->add_flag("--verify-fd", o.verify_fd, "check sensitivities against central finite differences");
  };
  auto* backbone = app.add_subcommand("backbone", "backbone curve at amplitude targets");
  auto* sens = app.add_subcommand("sens", "backbone-frequency sensitivities");
  auto* verify = app.add_subcommand("verify", "structural invariant suite");
  auto* optimize = app.add_subcommand("optimize", "backbone-constrained design optimization");
  auto* bench = app.add_subcommand("bench", "adjoint vs direct timing sweep");
  common(backbone, true);
  common(sens, true);
  common(verify, false);
  common(optimize, true);
  common(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (backbone->parsed()) return cmd_backbone(o);
    if (sens->parsed()) return cmd_sens(o);
    if (verify->parsed()) return cmd_verify(o);
    if (optimize->parsed()) return cmd_optimize(o);
    if (bench->parsed()) return cmd_bench(o);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
  return kConfig;
}
