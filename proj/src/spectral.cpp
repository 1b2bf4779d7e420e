#include "ssmopt/spectral.hpp"

#include <cmath>
#include <sstream>

#include "ssmopt/error.hpp"

namespace ssmopt {

ModalBasis modal_basis(const MechModel& model) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(model.K, model.M);
  if (es.info() != Eigen::Success) fail(ErrorCode::InvalidModel, "generalized eigensolver failed");
  ModalBasis b;
  b.omega = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  b.phi = es.eigenvectors();
  for (int c = 0; c < b.phi.cols(); ++c) {
    Vec v = b.phi.col(c);
    v /= std::sqrt(v.dot(model.M * v));
    fix_sign(v);
    b.phi.col(c) = v;
  }
  return b;
}

void fix_sign(Vec& phi) {
  const double mx = phi.cwiseAbs().maxCoeff();
  for (int i = 0; i < phi.size(); ++i) {
    if (std::abs(phi[i]) >= (1.0 - 1e-8) * mx) {
      if (phi[i] < 0.0) phi = -phi;
      return;
    }
  }
}

MasterPair make_master(const MechModel& model, const ModalBasis& basis, int mode) {
  const int n = static_cast<int>(basis.omega.size());
  if (mode < 0 || mode >= n) fail(ErrorCode::InvalidArgument, "mode index out of range");
  const double w = basis.omega[mode];
  if (!(w > 0.0)) fail(ErrorCode::InvalidModel, "selected mode has zero frequency");
  for (int j = 0; j < n; ++j) {
    if (j != mode && std::abs(basis.omega[j] - w) <= 1e-8 * w) {
      std::ostringstream os;
      os << "mode " << mode << " is repeated (omega = " << w << ")";
      fail(ErrorCode::DegenerateMode, os.str());
    }
  }
  MasterPair mp;
  mp.phi = basis.phi.col(mode);
  mp.omega = w;
  mp.mode_index = mode;
  mp.xi = (model.alpha + model.beta * w * w) / (2.0 * w);
  if (mp.xi >= 1.0) {
    const auto v = check_light_damping(model, w);
    std::ostringstream os;
    os << "damping ratio " << mp.xi << " >= 1 at omega = " << w;
    if (v.never_satisfied)
      os << "; alpha*beta > 1, light damping is never satisfied";
    else
      os << "; admissible omega interval (" << v.omega_lo << ", " << v.omega_hi << ")";
    fail(ErrorCode::LightDamping, os.str());
  }
  const double wd = w * std::sqrt(1.0 - mp.xi * mp.xi);
  mp.lambda = Complex(-mp.xi * w, wd);
  mp.lambda_bar = std::conj(mp.lambda);
  return mp;
}

MasterPair solve_master(const MechModel& model, int mode) {
  return make_master(model, modal_basis(model), mode);
}

MasterPair solve_master(const MechModel& model, const Vec& reference) { return track_mode(model, reference); }

double mac(const Vec& a, const Vec& b) {
  const double aa = a.squaredNorm();
  const double bb = b.squaredNorm();
  if (aa == 0.0 || bb == 0.0) fail(ErrorCode::InvalidArgument, "MAC of a zero vector");
  const double ab = a.dot(b);
  return ab * ab / (aa * bb);
}

MasterPair track_mode(const MechModel& model, const Vec& reference, double threshold) {
  if (reference.size() != model.n) fail(ErrorCode::InvalidArgument, "reference shape has wrong size");
  const ModalBasis basis = modal_basis(model);
  int best = -1;
  double best_mac = -1.0;
  for (int j = 0; j < basis.phi.cols(); ++j) {
    const double v = mac(basis.phi.col(j), reference);
    if (v > best_mac) {
      best_mac = v;
      best = j;
    }
  }
  if (best_mac < threshold) {
    std::ostringstream os;
    os << "best MAC " << best_mac << " below threshold " << threshold;
    fail(ErrorCode::TrackingLost, os.str());
  }
  MasterPair mp = make_master(model, basis, best);
  mp.mac = best_mac;
  return mp;
}

}  // namespace ssmopt
