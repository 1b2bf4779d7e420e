#include "ssmopt/multiindex.hpp"

#include "ssmopt/error.hpp"

namespace ssmopt {

OrderSet enumerate(int order) {
  if (order < 1) fail(ErrorCode::InvalidArgument, "multi-index order must be >= 1");
  OrderSet s;
  s.order = order;
  for (int m1 = order; 2 * m1 >= order; --m1) s.indices.push_back({m1, order - m1});
  return s;
}

std::vector<MultiIndex> enumerate_all(int order) {
  if (order < 0) fail(ErrorCode::InvalidArgument, "multi-index order must be >= 0");
  std::vector<MultiIndex> out;
  for (int m1 = order; m1 >= 0; --m1) out.push_back({m1, order - m1});
  return out;
}

Complex monomial(const Complex& p1, const Complex& p2, const MultiIndex& m) {
  Complex r(1.0, 0.0);
  for (int i = 0; i < m.m1; ++i) r *= p1;
  for (int i = 0; i < m.m2; ++i) r *= p2;
  return r;
}

Resonance near_resonant(const MultiIndex& m) {
  const int d = m.m1 - m.m2;
  if (d == 1) return Resonance::R1;
  if (d == -1) return Resonance::R2;
  return Resonance::None;
}

}  // namespace ssmopt
