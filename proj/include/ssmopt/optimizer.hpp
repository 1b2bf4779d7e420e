#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssmopt/models.hpp"
#include "ssmopt/spectral.hpp"
#include "ssmopt/ssm.hpp"

namespace ssmopt {

/// Scalar response an objective term may multiply.
enum class Response { None, Omega0, Backbone };

/// coef * prod(mu[vars]) * response
struct ObjectiveTerm {
  double coef = 1.0;
  std::vector<int> vars;
  Response response = Response::None;
  int dof = -1;      // Backbone response: observed DOF (-1: model default)
  double x = 0.0;    // Backbone response: RMS amplitude
};

/// Target frequency, either absolute or relative to the initial eigenfrequency.
struct FrequencyTarget {
  double value = 0.0;
  bool factor_of_omega0 = false;
  double resolve(double omega0) const { return factor_of_omega0 ? value * omega0 : value; }
};

struct BackboneConstraint {
  int dof = -1;  // -1: model default
  double x = 0.0;
  FrequencyTarget omega;
};

struct EigfreqConstraint {
  int mode = 0;
  FrequencyTarget omega;
};

struct OptTolerances {
  double constraint_tol = 1e-6;  // on (Omega - Omega_t) / |Omega_t|
  double step_tol = 1e-8;        // on the scaled step, variables mapped to [0, 1]
  double eps_tol = 1e-2;
  int min_order = 3;
  int max_order = 7;
  int max_iter = 50;
};

enum class GradientMethod { Adjoint, Direct };

struct OptProblem {
  std::shared_ptr<const ModelFactory> factory;
  std::vector<ObjectiveTerm> objective;
  std::vector<BackboneConstraint> backbone;
  std::vector<EigfreqConstraint> eigfreq;
  Vec lower;
  Vec upper;
  Vec initial;  // empty: factory design values
  OptTolerances tol;
  GradientMethod gradient = GradientMethod::Adjoint;
  int mode = 0;  // master mode at the initial design
  double mac_threshold = 0.6;
  int theta_samples = 128;
  double bound_push = 0.01;  // interior margin for the starting point, in scaled units

  int size() const { return static_cast<int>(lower.size()); }
  int constraint_count() const { return static_cast<int>(backbone.size() + eigfreq.size()); }
  void validate() const;
};

/// Next expansion order: +2 while above tolerance, never past max_order, never down.
int order_policy(double epsilon, double eps_tol, int current, int max_order);

struct Evaluation {
  Vec mu;
  double objective = 0.0;
  Vec grad_objective;
  Vec omega;        // backbone Omega then eigenfrequencies, in constraint order
  Vec target;       // resolved target frequencies
  Vec constraints;  // (omega - target) / |target|
  Mat jacobian;     // d constraints / d mu
  bool has_gradient = false;
  double epsilon = 0.0;
  int order = 0;
  double mac = 1.0;
  Vec phi;
  double omega0 = 0.0;

  double max_violation() const { return constraints.size() ? constraints.cwiseAbs().maxCoeff() : 0.0; }
};

/// Stateful evaluator: keeps the tracked mode shape and the current order.
class Evaluator {
 public:
  explicit Evaluator(const OptProblem& problem);

  /// Full evaluation at mu. With adapt set, the order may increase first.
  Evaluation evaluate(const Vec& mu, bool adapt, bool gradient);
  /// Accepts an iterate: its mode shape becomes the tracking reference.
  void accept(const Evaluation& e);

  int order() const { return order_; }
  double omega0() const { return omega0_; }
  const Vec& reference() const { return reference_; }

 private:
  const OptProblem& problem_;
  Vec reference_;
  double omega0_ = 0.0;
  int order_ = 3;
  std::vector<double> targets_;
};

struct TraceRow {
  int iter = 0;
  Vec mu;
  double objective = 0.0;
  Vec constraints;
  double max_violation = 0.0;  // scaled
  double epsilon = 0.0;
  int order = 0;
  double mac = 1.0;
  double grad_norm = 0.0;       // objective gradient, scaled variables
  double stationarity = 0.0;    // projected Lagrangian gradient, scaled variables
  double step_norm = 0.0;
  double alpha = 0.0;
  double merit = 0.0;
};

struct OptResult {
  Vec mu;
  Evaluation final;
  std::vector<TraceRow> trace;
  std::vector<std::string> names;
  bool converged = false;
  int iterations = 0;
  double seconds = 0.0;
  double stationarity = 0.0;
  std::string message;
  std::vector<std::string> warnings;
};

OptResult solve(const OptProblem& problem);

/// Parses an "optimize" block (JSON text) against the factory's design names.
OptProblem problem_from_json(const std::string& optimize_json, std::shared_ptr<const ModelFactory> factory,
                             const std::string& path = "optimize");

std::string trace_to_csv(const OptResult& r);
std::string result_to_json(const OptResult& r, const OptProblem& problem);

}  // namespace ssmopt
