#ifndef SSMOPT_SSMOPT_H
#define SSMOPT_SSMOPT_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(SSMOPT_BUILDING)
#define SSMOPT_API __declspec(dllexport)
#else
#define SSMOPT_API __declspec(dllimport)
#endif
#else
#define SSMOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero codes match the library's error classes. */
typedef enum ssmopt_status {
  SSMOPT_OK = 0,
  SSMOPT_INVALID_ARGUMENT = 1,
  SSMOPT_INVALID_CONFIG = 2,
  SSMOPT_INVALID_MODEL = 3,
  SSMOPT_LIGHT_DAMPING = 4,
  SSMOPT_DEGENERATE_MODE = 5,
  SSMOPT_TRACKING_LOST = 6,
  SSMOPT_OUTER_RESONANCE = 7,
  SSMOPT_DEGENERATE_PARAMETRIZATION = 8,
  SSMOPT_AMPLITUDE_UNREACHABLE = 9,
  SSMOPT_CONJUGACY_VIOLATION = 10,
  SSMOPT_TURNING_POINT = 11,
  SSMOPT_SINGULAR_SYSTEM = 12,
  SSMOPT_NOT_CONVERGED = 13,
  SSMOPT_INTERNAL = 99
} ssmopt_status;

/* Error class of a status: 0 ok, 1 configuration, 2 model, 3 SSM/computation, 4 optimizer. */
SSMOPT_API int ssmopt_status_class(ssmopt_status status);
SSMOPT_API const char* ssmopt_status_name(ssmopt_status status);
/* Message of the last failed call on this thread; empty after a success. */
SSMOPT_API const char* ssmopt_last_error(void);
SSMOPT_API const char* ssmopt_version(void);
/* Releases strings returned through char** out-parameters. */
SSMOPT_API void ssmopt_string_free(char* s);

/* ---- models ---- */
typedef struct ssmopt_model ssmopt_model;

/* model_json is a "model" block: {"type": "chain" | "vk_beam" | "matrix" | "catalog", ...}. */
SSMOPT_API ssmopt_status ssmopt_model_from_json(const char* model_json, ssmopt_model** out);
SSMOPT_API ssmopt_status ssmopt_model_catalog(const char* name, ssmopt_model** out);
/* Heterogeneous n-mass chain with the first n_params element parameters as design variables. */
SSMOPT_API ssmopt_status ssmopt_model_bench_chain(int n, int n_params, unsigned seed, ssmopt_model** out);
SSMOPT_API void ssmopt_model_free(ssmopt_model* model);

SSMOPT_API ssmopt_status ssmopt_model_info(const ssmopt_model* model, int* n_dof, int* n_params, int* default_dof);
SSMOPT_API ssmopt_status ssmopt_model_param_name(const ssmopt_model* model, int index, char** out);
/* Linear eigendata of one mode: omega, damping ratio, lambda = re + i im. */
SSMOPT_API ssmopt_status ssmopt_model_mode(const ssmopt_model* model, int mode, double* omega, double* xi,
                                           double* lambda_re, double* lambda_im);
/* The model serialized as an explicit "matrix" block. */
SSMOPT_API ssmopt_status ssmopt_model_to_json(const ssmopt_model* model, char** out);

/* ---- expansions ---- */
typedef struct ssmopt_expansion ssmopt_expansion;

/* Fixed odd order >= 3 for the given master mode. The expansion keeps its own copy of the model. */
SSMOPT_API ssmopt_status ssmopt_expansion_compute(const ssmopt_model* model, int mode, int order,
                                                  ssmopt_expansion** out);
/* Raises the order from min_order until the invariance error at the largest amplitude x_max of dof
   is at most eps_tol. history_json (optional) receives [{"order":o,"epsilon":e},...]; *converged is 0
   when max_order was reached above tolerance. */
SSMOPT_API ssmopt_status ssmopt_expansion_adapt(const ssmopt_model* model, int mode, int dof, double x_max,
                                                double eps_tol, int min_order, int max_order,
                                                ssmopt_expansion** out, int* converged, char** history_json);
SSMOPT_API void ssmopt_expansion_free(ssmopt_expansion* exp);
SSMOPT_API ssmopt_status ssmopt_expansion_order(const ssmopt_expansion* exp, int* order);
SSMOPT_API ssmopt_status ssmopt_expansion_to_json(const ssmopt_expansion* exp, char** out);
SSMOPT_API ssmopt_status ssmopt_invariance_error(const ssmopt_expansion* exp, double rho, double* epsilon);

/* ---- backbone ---- */
SSMOPT_API ssmopt_status ssmopt_omega_of_rho(const ssmopt_expansion* exp, double rho, double* omega);
SSMOPT_API ssmopt_status ssmopt_x_rms(const ssmopt_expansion* exp, int dof, double rho, double* x);
SSMOPT_API ssmopt_status ssmopt_rho_of_x(const ssmopt_expansion* exp, int dof, double x, double* rho);
/* CSV "rho,omega,x" for ascending positive amplitudes. */
SSMOPT_API ssmopt_status ssmopt_backbone_csv(const ssmopt_expansion* exp, int dof, const double* x, size_t count,
                                             char** out);

/* ---- sensitivities ---- */
typedef enum ssmopt_method { SSMOPT_ADJOINT = 0, SSMOPT_DIRECT = 1 } ssmopt_method;

/* dOmega/dmu at the RMS amplitude x0 of dof. grad has one slot per design variable.
   seconds (optional) receives the sensitivity wall time, excluding the primal expansion. */
SSMOPT_API ssmopt_status ssmopt_sensitivity(const ssmopt_expansion* exp, int dof, double x0, ssmopt_method method,
                                            double* omega, double* grad, double* seconds);
/* JSON array [{"param","dOmega","method","order","x0"},...]. */
SSMOPT_API ssmopt_status ssmopt_sensitivity_json(const ssmopt_expansion* exp, int dof, double x0,
                                                 ssmopt_method method, char** out);
/* Central finite differences of the full pipeline at fixed order. richardson (optional) receives
   |D(2h) - D(4h)| / |D(h) - D(2h)| per parameter. */
SSMOPT_API ssmopt_status ssmopt_sensitivity_fd(const ssmopt_model* model, int mode, int order, int dof, double x0,
                                               double* grad, double* richardson);
SSMOPT_API double ssmopt_max_relative_error(const double* a, const double* b, size_t n);

/* ---- verification and optimization ---- */
/* Structural invariant suite. x <= 0 picks a mildly nonlinear amplitude; dof < 0 the model default.
   report_json receives the check list, *failures the number of failed checks. */
SSMOPT_API ssmopt_status ssmopt_verify(const ssmopt_model* model, int order, int dof, double x, char** report_json,
                                       int* failures);

/* optimize_json is an "optimize" block. summary_json and trace_csv are optional outputs.
   Returns SSMOPT_NOT_CONVERGED (with outputs filled) when the solver stops before convergence. */
SSMOPT_API ssmopt_status ssmopt_optimize(const ssmopt_model* model, const char* optimize_json, char** summary_json,
                                         char** trace_csv);

#ifdef __cplusplus
}
#endif

#endif
