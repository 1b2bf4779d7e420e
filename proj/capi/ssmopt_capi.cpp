#include "ssmopt/ssmopt.h"

#include <chrono>
#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"
#include "ssmopt/backbone.hpp"
#include "ssmopt/error.hpp"
#include "ssmopt/models.hpp"
#include "ssmopt/optimizer.hpp"
#include "ssmopt/sens_adjoint.hpp"
#include "ssmopt/sens_direct.hpp"
#include "ssmopt/sensitivity.hpp"
#include "ssmopt/spectral.hpp"
#include "ssmopt/ssm.hpp"
#include "ssmopt/verify.hpp"

struct ssmopt_model {
  std::shared_ptr<const ssmopt::ModelFactory> factory;
};

struct ssmopt_expansion {
  std::shared_ptr<const ssmopt::ModelFactory> factory;
  ssmopt::MechModel model;
  ssmopt::SsmExpansion exp;
};

namespace {

thread_local std::string g_last_error;

ssmopt_status set_error(ssmopt_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <typename F>
ssmopt_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SSMOPT_OK;
  } catch (const ssmopt::Error& e) {
    return set_error(static_cast<ssmopt_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SSMOPT_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SSMOPT_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) ssmopt::fail(ssmopt::ErrorCode::InvalidArgument, what);
}

int resolve_dof(const ssmopt_expansion* e, int dof) {
  const int d = dof < 0 ? e->factory->default_dof() : dof;
  require(d < e->model.n, "dof out of range");
  return d;
}

}  // namespace

extern "C" {

int ssmopt_status_class(ssmopt_status status) {
  switch (status) {
    case SSMOPT_OK:
      return 0;
    case SSMOPT_INTERNAL:
      return 3;
    default:
      break;
  }
  switch (ssmopt::category(static_cast<ssmopt::ErrorCode>(static_cast<int>(status)))) {
    case ssmopt::ErrorCategory::Config:
      return 1;
    case ssmopt::ErrorCategory::Model:
      return 2;
    case ssmopt::ErrorCategory::Ssm:
      return 3;
    case ssmopt::ErrorCategory::Optimizer:
      return 4;
  }
  return 3;
}

const char* ssmopt_status_name(ssmopt_status status) {
  if (status == SSMOPT_OK) return "ok";
  if (status == SSMOPT_INTERNAL) return "internal";
  if (status < SSMOPT_INVALID_ARGUMENT || status > SSMOPT_NOT_CONVERGED) return "unknown";
  return ssmopt::to_string(static_cast<ssmopt::ErrorCode>(static_cast<int>(status)));
}

const char* ssmopt_last_error(void) { return g_last_error.c_str(); }

const char* ssmopt_version(void) { return SSMOPT_VERSION_STRING; }

void ssmopt_string_free(char* s) { delete[] s; }

ssmopt_status ssmopt_model_from_json(const char* model_json, ssmopt_model** out) {
  return guarded([&] {
    require(model_json && out, "null argument");
    *out = nullptr;
    auto f = ssmopt::model_from_json(model_json);
    f->build();  // surfaces model errors at load time
    *out = new ssmopt_model{std::move(f)};
  });
}

ssmopt_status ssmopt_model_catalog(const char* name, ssmopt_model** out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = nullptr;
    *out = new ssmopt_model{ssmopt::make_catalog_model(name)};
  });
}

ssmopt_status ssmopt_model_bench_chain(int n, int n_params, unsigned seed, ssmopt_model** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    require(n >= 1 && n_params >= 0, "invalid chain size");
    *out = nullptr;
    *out = new ssmopt_model{std::make_shared<ssmopt::ChainFactory>(ssmopt::ChainSpec::bench(n, n_params, seed))};
  });
}

void ssmopt_model_free(ssmopt_model* model) { delete model; }

ssmopt_status ssmopt_model_info(const ssmopt_model* model, int* n_dof, int* n_params, int* default_dof) {
  return guarded([&] {
    require(model != nullptr, "null model");
    const ssmopt::MechModel m = model->factory->build();
    if (n_dof) *n_dof = m.n;
    if (n_params) *n_params = m.param_count();
    if (default_dof) *default_dof = model->factory->default_dof();
  });
}

ssmopt_status ssmopt_model_param_name(const ssmopt_model* model, int index, char** out) {
  return guarded([&] {
    require(model && out, "null argument");
    const auto names = model->factory->design_names();
    require(index >= 0 && index < static_cast<int>(names.size()), "parameter index out of range");
    *out = dup_string(names[index]);
  });
}

ssmopt_status ssmopt_model_mode(const ssmopt_model* model, int mode, double* omega, double* xi, double* lambda_re,
                                double* lambda_im) {
  return guarded([&] {
    require(model != nullptr, "null model");
    const ssmopt::MasterPair mp = ssmopt::solve_master(model->factory->build(), mode);
    if (omega) *omega = mp.omega;
    if (xi) *xi = mp.xi;
    if (lambda_re) *lambda_re = mp.lambda.real();
    if (lambda_im) *lambda_im = mp.lambda.imag();
  });
}

ssmopt_status ssmopt_model_to_json(const ssmopt_model* model, char** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = dup_string(ssmopt::model_to_json(model->factory->build(), model->factory->design_values()));
  });
}

ssmopt_status ssmopt_expansion_compute(const ssmopt_model* model, int mode, int order, ssmopt_expansion** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = nullptr;
    auto e = std::make_unique<ssmopt_expansion>();
    e->factory = model->factory;
    e->model = model->factory->build();
    e->exp = ssmopt::compute_ssm(e->model, ssmopt::solve_master(e->model, mode), order);
    *out = e.release();
  });
}

ssmopt_status ssmopt_expansion_adapt(const ssmopt_model* model, int mode, int dof, double x_max, double eps_tol,
                                     int min_order, int max_order, ssmopt_expansion** out, int* converged,
                                     char** history_json) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = nullptr;
    auto e = std::make_unique<ssmopt_expansion>();
    e->factory = model->factory;
    e->model = model->factory->build();
    const int d = resolve_dof(e.get(), dof);
    ssmopt::AdaptResult r = ssmopt::adapt_for_amplitude(e->model, ssmopt::solve_master(e->model, mode), d, x_max,
                                                         eps_tol, min_order, max_order);
    e->exp = std::move(r.expansion);
    if (converged) *converged = r.converged ? 1 : 0;
    if (history_json) {
      nlohmann::json h = nlohmann::json::array();
      for (const auto& [o, eps] : r.history) h.push_back({{"order", o}, {"epsilon", eps}});
      *history_json = dup_string(h.dump());
    }
    *out = e.release();
  });
}

void ssmopt_expansion_free(ssmopt_expansion* exp) { delete exp; }

ssmopt_status ssmopt_expansion_order(const ssmopt_expansion* exp, int* order) {
  return guarded([&] {
    require(exp && order, "null argument");
    *order = exp->exp.order;
  });
}

ssmopt_status ssmopt_expansion_to_json(const ssmopt_expansion* exp, char** out) {
  return guarded([&] {
    require(exp && out, "null argument");
    *out = dup_string(ssmopt::expansion_to_json(exp->exp));
  });
}

ssmopt_status ssmopt_invariance_error(const ssmopt_expansion* exp, double rho, double* epsilon) {
  return guarded([&] {
    require(exp && epsilon, "null argument");
    *epsilon = ssmopt::invariance_residual(exp->model, exp->exp, rho).epsilon;
  });
}

ssmopt_status ssmopt_omega_of_rho(const ssmopt_expansion* exp, double rho, double* omega) {
  return guarded([&] {
    require(exp && omega, "null argument");
    *omega = ssmopt::omega_of_rho(exp->exp, rho);
  });
}

ssmopt_status ssmopt_x_rms(const ssmopt_expansion* exp, int dof, double rho, double* x) {
  return guarded([&] {
    require(exp && x, "null argument");
    *x = ssmopt::x_rms(exp->exp, resolve_dof(exp, dof), rho);
  });
}

ssmopt_status ssmopt_rho_of_x(const ssmopt_expansion* exp, int dof, double x, double* rho) {
  return guarded([&] {
    require(exp && rho, "null argument");
    *rho = ssmopt::rho_of_x(exp->exp, resolve_dof(exp, dof), x);
  });
}

ssmopt_status ssmopt_backbone_csv(const ssmopt_expansion* exp, int dof, const double* x, size_t count, char** out) {
  return guarded([&] {
    require(exp && out && (x || count == 0), "null argument");
    const std::vector<double> targets(x, x + count);
    *out = dup_string(ssmopt::backbone_to_csv(ssmopt::sample_backbone(exp->exp, resolve_dof(exp, dof), targets)));
  });
}

namespace {

ssmopt::SensitivityReport run_sensitivity(const ssmopt_expansion* exp, int dof, double x0, ssmopt_method method) {
  require(exp->model.param_count() > 0, "model declares no parameters");
  const ssmopt::AmplitudeTarget t{resolve_dof(exp, dof), x0, ssmopt::kDefaultThetaSamples};
  switch (method) {
    case SSMOPT_ADJOINT:
      return ssmopt::sensitivity_adjoint(exp->model, exp->exp, t);
    case SSMOPT_DIRECT:
      return ssmopt::sensitivity_direct(exp->model, exp->exp, t);
  }
  ssmopt::fail(ssmopt::ErrorCode::InvalidArgument, "unknown sensitivity method");
}

}  // namespace

ssmopt_status ssmopt_sensitivity(const ssmopt_expansion* exp, int dof, double x0, ssmopt_method method,
                                 double* omega, double* grad, double* seconds) {
  return guarded([&] {
    require(exp != nullptr, "null expansion");
    const ssmopt::SensitivityReport r = run_sensitivity(exp, dof, x0, method);
    if (omega) *omega = r.omega;
    if (grad)
      for (int p = 0; p < r.dOmega.size(); ++p) grad[p] = r.dOmega[p];
    if (seconds) *seconds = r.seconds;
  });
}

ssmopt_status ssmopt_sensitivity_json(const ssmopt_expansion* exp, int dof, double x0, ssmopt_method method,
                                      char** out) {
  return guarded([&] {
    require(exp && out, "null argument");
    *out = dup_string(ssmopt::report_to_json(run_sensitivity(exp, dof, x0, method)));
  });
}

ssmopt_status ssmopt_sensitivity_fd(const ssmopt_model* model, int mode, int order, int dof, double x0, double* grad,
                                    double* richardson) {
  return guarded([&] {
    require(model && grad, "null argument");
    const ssmopt::MechModel m = model->factory->build();
    require(m.param_count() > 0, "model declares no parameters");
    const int d = dof < 0 ? model->factory->default_dof() : dof;
    const ssmopt::MasterPair mp = ssmopt::solve_master(m, mode);
    const ssmopt::FdReport r = ssmopt::sensitivity_fd(*model->factory, model->factory->design_values(), mp.phi,
                                                      order, {d, x0, ssmopt::kDefaultThetaSamples});
    for (int p = 0; p < r.report.dOmega.size(); ++p) {
      grad[p] = r.report.dOmega[p];
      if (richardson) richardson[p] = r.richardson_ratio[p];
    }
  });
}

double ssmopt_max_relative_error(const double* a, const double* b, size_t n) {
  if (!a || !b) return -1.0;
  const ssmopt::Vec va = Eigen::Map<const ssmopt::Vec>(a, static_cast<Eigen::Index>(n));
  const ssmopt::Vec vb = Eigen::Map<const ssmopt::Vec>(b, static_cast<Eigen::Index>(n));
  return ssmopt::max_relative_error(va, vb);
}

ssmopt_status ssmopt_verify(const ssmopt_model* model, int order, int dof, double x, char** report_json,
                            int* failures) {
  return guarded([&] {
    require(model != nullptr, "null model");
    ssmopt::VerifyOptions opts;
    opts.order = order;
    opts.dof = dof;
    opts.x = x;
    const auto checks = ssmopt::run_invariants(*model->factory, opts);
    int failed = 0;
    for (const auto& c : checks) failed += c.passed ? 0 : 1;
    if (failures) *failures = failed;
    if (report_json) *report_json = dup_string(ssmopt::checks_to_json(checks));
  });
}

ssmopt_status ssmopt_optimize(const ssmopt_model* model, const char* optimize_json, char** summary_json,
                              char** trace_csv) {
  bool converged = false;
  const ssmopt_status s = guarded([&] {
    require(model && optimize_json, "null argument");
    const ssmopt::OptProblem p = ssmopt::problem_from_json(optimize_json, model->factory);
    const ssmopt::OptResult r = ssmopt::solve(p);
    converged = r.converged;
    if (summary_json) *summary_json = dup_string(ssmopt::result_to_json(r, p));
    if (trace_csv) *trace_csv = dup_string(ssmopt::trace_to_csv(r));
  });
  if (s == SSMOPT_OK && !converged) return set_error(SSMOPT_NOT_CONVERGED, "optimizer stopped before convergence");
  return s;
}

}  // extern "C"
