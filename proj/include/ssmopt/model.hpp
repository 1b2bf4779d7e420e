#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ssmopt/tensor.hpp"
#include "ssmopt/types.hpp"

namespace ssmopt {

/// Derivatives of the system operators with respect to one design variable.
/// The damping derivative follows from the Rayleigh law and is not stored.
struct ParamDerivative {
  std::string name;
  SpMat dM;
  SpMat dK;
  SymTensor3 dT2;
  SymTensor4 dT3;
};

/// M x'' + C x' + K x + T2(x,x) + T3(x,x,x) = 0 with C = alpha M + beta K.
struct MechModel {
  int n = 0;
  Mat M;
  Mat K;
  double alpha = 0.0;
  double beta = 0.0;
  SymTensor3 T2;
  SymTensor4 T3;
  std::vector<ParamDerivative> params;

  int param_count() const { return static_cast<int>(params.size()); }
  int param_index(const std::string& name) const;

  /// Throws InvalidModel if any structural invariant is broken.
  void validate() const;
};

Mat assemble_damping(const MechModel& model);

template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> nonlinear_force(const MechModel& model,
                                                    const Eigen::Matrix<S, Eigen::Dynamic, 1>& x) {
  Eigen::Matrix<S, Eigen::Dynamic, 1> f = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(model.n);
  if (!model.T2.empty()) f += model.T2.contract(x, x);
  if (!model.T3.empty()) f += model.T3.contract(x, x, x);
  return f;
}

/// Tangent of the nonlinear force: d f / d x applied to v.
Vec nonlinear_force_jvp(const MechModel& model, const Vec& x, const Vec& v);

struct LightDampingVerdict {
  bool valid = true;
  bool never_satisfied = false;
  double omega_lo = 0.0;
  double omega_hi = std::numeric_limits<double>::infinity();
};

/// Light-damping condition alpha - 2 omega + beta omega^2 < 0 and the
/// admissible frequency interval for the given Rayleigh coefficients.
LightDampingVerdict check_light_damping(double alpha, double beta, double omega);
LightDampingVerdict check_light_damping(const MechModel& model, double omega);

/// First-order operators B = [[C, M], [M, 0]] and A = [[-K, 0], [0, M]].
std::pair<Mat, Mat> first_order_operators(const MechModel& model);

/// Dense copy of a parameter derivative of the damping matrix.
Mat damping_derivative(const MechModel& model, const ParamDerivative& d);

}  // namespace ssmopt
