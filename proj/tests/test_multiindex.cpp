#include <gtest/gtest.h>

#include <set>

#include "ssmopt/error.hpp"
#include "ssmopt/multiindex.hpp"

using namespace ssmopt;

TEST(MultiIndex, CanonicalEnumeration) {
  const OrderSet s3 = enumerate(3);
  ASSERT_EQ(s3.indices.size(), 2u);
  EXPECT_EQ(s3.indices[0], (MultiIndex{3, 0}));
  EXPECT_EQ(s3.indices[1], (MultiIndex{2, 1}));
  const OrderSet s4 = enumerate(4);
  ASSERT_EQ(s4.indices.size(), 3u);
  EXPECT_EQ(s4.indices[2], (MultiIndex{2, 2}));
  for (int o = 1; o <= 9; ++o) {
    EXPECT_EQ(static_cast<int>(enumerate(o).indices.size()), o / 2 + 1);
    EXPECT_EQ(static_cast<int>(enumerate_all(o).size()), o + 1);
    for (const auto& m : enumerate(o).indices) EXPECT_TRUE(m.canonical());
  }
  EXPECT_THROW(enumerate(0), Error);
}

TEST(MultiIndex, NearResonanceIsIntegerCondition) {
  EXPECT_EQ(near_resonant({2, 1}), Resonance::R1);
  EXPECT_EQ(near_resonant({1, 2}), Resonance::R2);
  EXPECT_EQ(near_resonant({3, 2}), Resonance::R1);
  EXPECT_EQ(near_resonant({3, 0}), Resonance::None);
  EXPECT_EQ(near_resonant({1, 1}), Resonance::None);
  EXPECT_EQ(near_resonant({2, 0}), Resonance::None);
}

TEST(MultiIndex, ResonanceTagsMirroredAndOneR1PerOddOrder) {
  for (int o = 2; o <= 11; ++o) {
    int r1 = 0;
    for (const auto& m : enumerate_all(o)) {
      const Resonance a = near_resonant(m), b = near_resonant(m.symmetric());
      if (a == Resonance::None) { EXPECT_EQ(b, Resonance::None); }
      if (a == Resonance::R1) { EXPECT_EQ(b, Resonance::R2); }
      if (a == Resonance::R2) { EXPECT_EQ(b, Resonance::R1); }
    }
    for (const auto& m : enumerate(o).indices) r1 += near_resonant(m) == Resonance::R1;
    EXPECT_EQ(r1, o % 2 ? 1 : 0) << "order " << o;
  }
}

TEST(MultiIndex, FlatIndexIsDenseAndUnique) {
  const int max_order = 9;
  std::set<int> seen;
  for (int o = 0; o <= max_order; ++o)
    for (int m1 = o; m1 >= 0; --m1) seen.insert(flat_index({m1, o - m1}));
  EXPECT_EQ(static_cast<int>(seen.size()), flat_size(max_order));
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), flat_size(max_order) - 1);
}

TEST(MultiIndex, MonomialAndSymmetry) {
  const Complex p1(0.3, 0.4), p2 = std::conj(p1);
  const MultiIndex m{3, 1};
  EXPECT_NEAR(std::abs(monomial(p1, p2, m) - p1 * p1 * p1 * p2), 0.0, 1e-16);
  // Conjugate arguments: the symmetric monomial is the conjugate.
  EXPECT_NEAR(std::abs(monomial(p1, p2, m.symmetric()) - std::conj(monomial(p1, p2, m))), 0.0, 1e-16);
  EXPECT_TRUE((MultiIndex{2, 2}).self_symmetric());
  EXPECT_FALSE((MultiIndex{1, 2}).canonical());
}
