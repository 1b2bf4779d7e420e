#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ssmopt/model.hpp"

namespace ssmopt {

/// Chain of masses, the first one grounded. Spring s connects mass s-1 (the
/// ground for s = 0) to mass s and has linear, quadratic and cubic stiffness.
struct ChainSpec {
  std::vector<double> m;
  std::vector<double> k;
  std::vector<double> k2;
  std::vector<double> k3;
  double alpha = 0.0;
  double beta = 0.0;
  // false: quadratic spring term enters both masses with the same sign, as in
  // the two-oscillator benchmark equations; true: equal and opposite forces.
  bool potential = false;
  // Design variables: "m", "k", "k2", "k3" (all springs/masses at once) or
  // "m:i", "k:i", "k2:i", "k3:i" (one element).
  std::vector<std::string> params{"m", "k", "k2", "k3"};

  int size() const { return static_cast<int>(m.size()); }
  static ChainSpec uniform(int n, double m, double k, double k2, double k3, double alpha, double beta);
  /// The two-oscillator benchmark: m = 1, k = 1, k2 = 0.5, k3 = 0.2, beta = 0.1.
  static ChainSpec two_oscillators();
  /// Heterogeneous chain used for timing sweeps; parameters cycle k, k2, k3, m per element.
  static ChainSpec bench(int n, int n_params, unsigned seed = 12345);
};

MechModel build_chain(const ChainSpec& spec);
/// Independent evaluation of the chain restoring force, spring by spring.
Vec chain_force(const ChainSpec& spec, const Vec& x);

/// Clamped-clamped von Karman beam with y = A1 sin(pi x / L) + A2 sin(2 pi x / L).
struct VkBeamSpec {
  int n_elements = 10;
  double L = 1.0;
  double h = 0.01;
  double width = 0.0;  // <= 0 means equal to h
  double A1 = 0.0;
  double A2 = 0.0;
  double E = 90e9;
  double nu = 0.3;
  double density = 7850.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<std::string> params{"A1", "A2", "h", "L"};

  /// Index of the transverse DOF of the middle node (n_elements even).
  int center_dof() const;
};

/// Assembles M, K, T2, T3 without parameter derivatives.
MechModel assemble_vk_beam(const VkBeamSpec& spec);
/// Assembly plus central finite-difference derivatives for the listed parameters.
MechModel build_vk_beam(const VkBeamSpec& spec);

double vk_get(const VkBeamSpec& spec, const std::string& name);
void vk_set(VkBeamSpec& spec, const std::string& name, double value);

/// Parametrized model: maps a design vector to a model with derivatives.
class ModelFactory {
 public:
  virtual ~ModelFactory() = default;
  virtual std::vector<std::string> design_names() const = 0;
  virtual Vec design_values() const = 0;
  virtual MechModel build(const Vec& mu) const = 0;
  /// Observed DOF suggested by the model (free end, beam center, ...).
  virtual int default_dof() const { return 0; }
  MechModel build() const { return build(design_values()); }
};

class ChainFactory : public ModelFactory {
 public:
  explicit ChainFactory(ChainSpec spec);
  std::vector<std::string> design_names() const override { return spec_.params; }
  Vec design_values() const override;
  MechModel build(const Vec& mu) const override;
  int default_dof() const override { return spec_.size() - 1; }
  const ChainSpec& spec() const { return spec_; }

 private:
  ChainSpec spec_;
};

class VkBeamFactory : public ModelFactory {
 public:
  explicit VkBeamFactory(VkBeamSpec spec);
  std::vector<std::string> design_names() const override { return spec_.params; }
  Vec design_values() const override;
  MechModel build(const Vec& mu) const override;
  int default_dof() const override { return spec_.center_dof(); }
  const VkBeamSpec& spec() const { return spec_; }

 private:
  VkBeamSpec spec_;
};

/// Explicit operators with constant parameter derivatives:
/// M(mu) = M0 + sum (mu_p - mu0_p) dM_p, likewise for K, T2, T3.
class MatrixFactory : public ModelFactory {
 public:
  MatrixFactory(MechModel base, Vec mu0);
  std::vector<std::string> design_names() const override;
  Vec design_values() const override { return mu0_; }
  MechModel build(const Vec& mu) const override;

 private:
  MechModel base_;
  Vec mu0_;
};

std::vector<std::string> model_catalog();
std::unique_ptr<ModelFactory> make_catalog_model(const std::string& name);

/// Parses a "model" block: {"type": "chain" | "vk_beam" | "matrix" | "catalog", ...}.
/// Unknown keys are rejected with their path.
std::unique_ptr<ModelFactory> model_from_json(const std::string& json_text, const std::string& path = "model");

/// Serializes a model (operators and parameter derivatives) as a "matrix" block.
std::string model_to_json(const MechModel& model, const Vec& mu0);

}  // namespace ssmopt
