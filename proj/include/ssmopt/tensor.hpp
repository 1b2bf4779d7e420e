#pragma once

#include <array>
#include <vector>

#include "ssmopt/types.hpp"

namespace ssmopt {

/// Sparse order-3 tensor symmetric in its two trailing indices.
///
/// Entries are stored once per sorted trailing pair (j <= k) and hold the
/// symmetric component value T^{ijk} = T^{ikj}.
class SymTensor3 {
 public:
  struct Entry {
    int i, j, k;
    double v;
  };

  SymTensor3() = default;
  explicit SymTensor3(int n) : n_(n) {}

  int size() const { return n_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Adds a raw (not necessarily symmetric) coefficient; it is spread evenly
  /// over the distinct orderings of (j, k).
  void add_raw(int i, int j, int k, double v);
  /// Adds directly to the symmetric component at (i, {j, k}).
  void add_component(int i, int j, int k, double v);
  /// Merges duplicate entries and drops exact zeros.
  void compress();

  double component(int i, int j, int k) const;

  template <typename S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> contract(const Eigen::Matrix<S, Eigen::Dynamic, 1>& x,
                                               const Eigen::Matrix<S, Eigen::Dynamic, 1>& y) const {
    Eigen::Matrix<S, Eigen::Dynamic, 1> out = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(n_);
    for (const auto& e : entries_) {
      if (e.j == e.k)
        out[e.i] += e.v * x[e.j] * y[e.k];
      else
        out[e.i] += e.v * (x[e.j] * y[e.k] + x[e.k] * y[e.j]);
    }
    return out;
  }

  /// g^j = sum_{i,k} b^i T^{ijk} y^k (bilinear, no conjugation).
  template <typename S>
  void adjoint_slot_add(const Eigen::Matrix<S, Eigen::Dynamic, 1>& b,
                        const Eigen::Matrix<S, Eigen::Dynamic, 1>& y,
                        Eigen::Matrix<S, Eigen::Dynamic, 1>& g) const {
    for (const auto& e : entries_) {
      const S bi = b[e.i] * e.v;
      g[e.j] += bi * y[e.k];
      if (e.j != e.k) g[e.k] += bi * y[e.j];
    }
  }

  /// Returns a + s * b on the union pattern.
  static SymTensor3 axpy(const SymTensor3& a, double s, const SymTensor3& b);
  SymTensor3 scaled(double s) const;

 private:
  int n_ = 0;
  std::vector<Entry> entries_;
};

/// Sparse order-4 tensor symmetric in its three trailing indices.
class SymTensor4 {
 public:
  struct Entry {
    int i, j, k, l;
    double v;
  };

  SymTensor4() = default;
  explicit SymTensor4(int n) : n_(n) {}

  int size() const { return n_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  void add_raw(int i, int j, int k, int l, double v);
  void add_component(int i, int j, int k, int l, double v);
  void compress();

  double component(int i, int j, int k, int l) const;

  /// Distinct orderings of a sorted trailing triple.
  static int permutations(int j, int k, int l, std::array<std::array<int, 3>, 6>& out);

  template <typename S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> contract(const Eigen::Matrix<S, Eigen::Dynamic, 1>& x,
                                               const Eigen::Matrix<S, Eigen::Dynamic, 1>& y,
                                               const Eigen::Matrix<S, Eigen::Dynamic, 1>& z) const {
    Eigen::Matrix<S, Eigen::Dynamic, 1> out = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(n_);
    std::array<std::array<int, 3>, 6> p;
    for (const auto& e : entries_) {
      const int np = permutations(e.j, e.k, e.l, p);
      S acc = S(0);
      for (int q = 0; q < np; ++q) acc += x[p[q][0]] * y[p[q][1]] * z[p[q][2]];
      out[e.i] += e.v * acc;
    }
    return out;
  }

  /// g^j = sum_{i,k,l} b^i T^{ijkl} y^k z^l.
  template <typename S>
  void adjoint_slot_add(const Eigen::Matrix<S, Eigen::Dynamic, 1>& b,
                        const Eigen::Matrix<S, Eigen::Dynamic, 1>& y,
                        const Eigen::Matrix<S, Eigen::Dynamic, 1>& z,
                        Eigen::Matrix<S, Eigen::Dynamic, 1>& g) const {
    std::array<std::array<int, 3>, 6> p;
    for (const auto& e : entries_) {
      const S bi = b[e.i] * e.v;
      const int np = permutations(e.j, e.k, e.l, p);
      for (int q = 0; q < np; ++q) g[p[q][0]] += bi * y[p[q][1]] * z[p[q][2]];
    }
  }

  static SymTensor4 axpy(const SymTensor4& a, double s, const SymTensor4& b);
  SymTensor4 scaled(double s) const;

 private:
  int n_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace ssmopt
