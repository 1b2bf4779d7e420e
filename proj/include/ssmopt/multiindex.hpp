#pragma once

#include <vector>

#include "ssmopt/types.hpp"

namespace ssmopt {

struct MultiIndex {
  int m1 = 0;
  int m2 = 0;

  int order() const { return m1 + m2; }
  MultiIndex symmetric() const { return {m2, m1}; }
  bool canonical() const { return m1 >= m2; }
  bool self_symmetric() const { return m1 == m2; }
  bool operator==(const MultiIndex& o) const { return m1 == o.m1 && m2 == o.m2; }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }
};

enum class Resonance { None, R1, R2 };

struct OrderSet {
  int order = 0;
  std::vector<MultiIndex> indices;
};

/// Canonical representatives (m1 >= m2) of the given order, descending m1.
OrderSet enumerate(int order);
/// Every multi-index of the given order, descending m1.
std::vector<MultiIndex> enumerate_all(int order);

Complex monomial(const Complex& p1, const Complex& p2, const MultiIndex& m);

Resonance near_resonant(const MultiIndex& m);

/// Flat position of m in a triangular table holding orders 0..N.
inline int flat_index(const MultiIndex& m) {
  const int o = m.order();
  return o * (o + 1) / 2 + m.m2;
}
inline int flat_size(int max_order) { return (max_order + 1) * (max_order + 2) / 2; }

}  // namespace ssmopt
