#pragma once

#include "ssmopt/model.hpp"

namespace ssmopt {

/// Master mode of the SSM: mass-normalized undamped shape plus the complex
/// eigenvalue pair lambda = -xi omega + i omega sqrt(1 - xi^2).
struct MasterPair {
  Vec phi;
  double omega = 0.0;
  double xi = 0.0;
  Complex lambda;
  Complex lambda_bar;
  int mode_index = 0;
  double mac = 1.0;  // MAC against the tracking reference, 1 when selected by index

  double omega_d() const { return lambda.imag(); }
};

/// All undamped modes, ascending frequency, mass-normalized and sign-fixed.
struct ModalBasis {
  Vec omega;
  Mat phi;
};

ModalBasis modal_basis(const MechModel& model);

/// Flips phi so that its largest-magnitude entry is positive.
void fix_sign(Vec& phi);

/// Builds the master pair for the given mode of the basis.
MasterPair make_master(const MechModel& model, const ModalBasis& basis, int mode);

MasterPair solve_master(const MechModel& model, int mode);
MasterPair solve_master(const MechModel& model, const Vec& reference);

double mac(const Vec& a, const Vec& b);

/// Picks the mode maximizing MAC against the reference shape. Throws
/// TrackingLost if the best MAC is below the threshold.
MasterPair track_mode(const MechModel& model, const Vec& reference, double threshold = 0.6);

}  // namespace ssmopt
