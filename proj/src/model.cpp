#include "ssmopt/model.hpp"

#include <cmath>

#include "ssmopt/error.hpp"

namespace ssmopt {

int MechModel::param_index(const std::string& name) const {
  for (int i = 0; i < param_count(); ++i)
    if (params[i].name == name) return i;
  return -1;
}

void MechModel::validate() const {
  if (n <= 0) fail(ErrorCode::InvalidModel, "model has no degrees of freedom");
  if (M.rows() != n || M.cols() != n || K.rows() != n || K.cols() != n)
    fail(ErrorCode::InvalidModel, "M and K must be n x n");
  if (!M.allFinite() || !K.allFinite()) fail(ErrorCode::InvalidModel, "non-finite entries in M or K");
  const double sm = M.cwiseAbs().maxCoeff();
  const double sk = std::max(K.cwiseAbs().maxCoeff(), 1e-300);
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * sm)
    fail(ErrorCode::InvalidModel, "mass matrix is not symmetric");
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * sk)
    fail(ErrorCode::InvalidModel, "stiffness matrix is not symmetric");
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) fail(ErrorCode::InvalidModel, "mass matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * sk)
    fail(ErrorCode::InvalidModel, "stiffness matrix is not positive semidefinite");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) fail(ErrorCode::InvalidModel, "Rayleigh coefficients must be nonnegative");
  if ((!T2.empty() && T2.size() != n) || (!T3.empty() && T3.size() != n))
    fail(ErrorCode::InvalidModel, "tensor dimension does not match n");
  for (const auto& p : params) {
    if (p.dM.rows() != n || p.dM.cols() != n || p.dK.rows() != n || p.dK.cols() != n)
      fail(ErrorCode::InvalidModel, "parameter derivative '" + p.name + "' has wrong shape");
  }
}

Mat assemble_damping(const MechModel& model) { return model.alpha * model.M + model.beta * model.K; }

Vec nonlinear_force_jvp(const MechModel& model, const Vec& x, const Vec& v) {
  Vec out = Vec::Zero(model.n);
  if (!model.T2.empty()) out += 2.0 * model.T2.contract(x, v);
  if (!model.T3.empty()) out += 3.0 * model.T3.contract(x, x, v);
  return out;
}

LightDampingVerdict check_light_damping(double alpha, double beta, double omega) {
  if (!(omega > 0.0)) fail(ErrorCode::InvalidArgument, "omega must be positive");
  LightDampingVerdict v;
  if (beta == 0.0) {
    v.omega_lo = alpha / 2.0;
  } else if (alpha == 0.0) {
    v.omega_hi = 2.0 / beta;
  } else if (alpha * beta < 1.0) {
    const double s = std::sqrt(1.0 - alpha * beta);
    v.omega_lo = (1.0 - s) / beta;
    v.omega_hi = (1.0 + s) / beta;
  } else {
    v.never_satisfied = true;
    v.valid = false;
    v.omega_lo = v.omega_hi = 0.0;
    return v;
  }
  v.valid = alpha - 2.0 * omega + beta * omega * omega < 0.0;
  return v;
}

LightDampingVerdict check_light_damping(const MechModel& model, double omega) {
  return check_light_damping(model.alpha, model.beta, omega);
}

std::pair<Mat, Mat> first_order_operators(const MechModel& model) {
  const int n = model.n;
  Mat B = Mat::Zero(2 * n, 2 * n);
  Mat A = Mat::Zero(2 * n, 2 * n);
  B.topLeftCorner(n, n) = assemble_damping(model);
  B.topRightCorner(n, n) = model.M;
  B.bottomLeftCorner(n, n) = model.M;
  A.topLeftCorner(n, n) = -model.K;
  A.bottomRightCorner(n, n) = model.M;
  return {B, A};
}

Mat damping_derivative(const MechModel& model, const ParamDerivative& d) {
  return model.alpha * Mat(d.dM) + model.beta * Mat(d.dK);
}

}  // namespace ssmopt
