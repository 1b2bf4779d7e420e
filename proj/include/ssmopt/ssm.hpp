#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ssmopt/model.hpp"
#include "ssmopt/multiindex.hpp"
#include "ssmopt/spectral.hpp"

namespace ssmopt {

/// Coefficients and cached intermediates of one multi-index.
struct IndexData {
  MultiIndex m;
  bool present = false;
  Complex Lambda;
  CVec w;
  CVec wdot;
  Complex R1;
  Complex R2;
  // Cached for the sensitivity passes.
  Resonance res = Resonance::None;
  CVec f;
  CVec V;
  CVec Vdot;
  CVec Cm;
  CVec D;             // D^j of the active resonance, empty otherwise
  Complex den;        // Lambda_m + lambda_j + alpha + beta omega^2 of the active resonance
  double border = 0;  // scaling of the orthogonality border, 0 when unbordered
  std::shared_ptr<Eigen::PartialPivLU<CMat>> lu;

  Complex R(int j) const { return j == 1 ? R1 : R2; }
};

/// Autonomous 2D SSM expansion in normal-form style.
struct SsmExpansion {
  int order = 0;
  MasterPair master;
  Mat C;
  bool full_set = false;  // every index solved explicitly, no conjugate shortcut
  std::vector<IndexData> data;

  bool has(const MultiIndex& m) const {
    const int f = flat_index(m);
    return m.m1 >= 0 && m.m2 >= 0 && f < static_cast<int>(data.size()) && data[f].present;
  }
  const IndexData& at(const MultiIndex& m) const;
  IndexData& at(const MultiIndex& m);
  Complex lambda(int j) const { return j == 1 ? master.lambda : master.lambda_bar; }
};

struct ErrorMeasure {
  double epsilon = 0.0;
  double rho_max = 0.0;
  int theta_samples = 0;
};

struct SsmOptions {
  bool full_set = false;
  double outer_rcond = 1e-12;
};

SsmExpansion leading_order(const MechModel& model, const MasterPair& master, bool full_set = false);

/// Solves the cohomological equation for one multi-index. Lower orders must
/// be present. In canonical mode the symmetric partner is filled by conjugation.
void order_step(const MechModel& model, SsmExpansion& exp, const MultiIndex& m,
                const SsmOptions& opts = {});

SsmExpansion compute_ssm(const MechModel& model, const MasterPair& master, int order,
                         const SsmOptions& opts = {});

/// Raises the order of an existing expansion, keeping lower orders intact.
void extend_ssm(const MechModel& model, SsmExpansion& exp, int order, const SsmOptions& opts = {});

/// Relative residual ||L_m w_m - h_m|| / ||h_m|| for one index.
double cohomological_residual(const MechModel& model, const SsmExpansion& exp, const MultiIndex& m);

/// Evaluates W(p), its velocity part and the reduced dynamics R(p).
struct ManifoldPoint {
  CVec w;
  CVec wdot;
  CVec a;  // DW(p) R(p), displacement part
  CVec b;  // DW(p) R(p), velocity part
};
ManifoldPoint evaluate_manifold(const SsmExpansion& exp, Complex p1, Complex p2);

ErrorMeasure invariance_residual(const MechModel& model, const SsmExpansion& exp, double rho,
                                 int theta_samples = 32);

struct AdaptResult {
  SsmExpansion expansion;
  ErrorMeasure error;
  bool converged = true;  // false when max order was reached above tolerance
  std::vector<std::pair<int, double>> history;  // (order, epsilon)
};

AdaptResult adapt_order(const MechModel& model, const MasterPair& master, double tol, double rho,
                        int min_order, int max_order, int theta_samples = 32);

/// Continues adaptation from an existing expansion; the order never decreases.
AdaptResult adapt_order(const MechModel& model, SsmExpansion exp, double tol, double rho,
                        int max_order, int theta_samples = 32);

/// JSON dump of the expansion coefficients (all orders, all indices).
std::string expansion_to_json(const SsmExpansion& exp);

}  // namespace ssmopt
