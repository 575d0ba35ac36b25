// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace cia {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformRange) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = r.uniform(-3.0, 2.0);
    EXPECT_GE(v, -3.0);
    EXPECT_LT(v, 2.0);
  }
}

TEST(Rng, BelowIsUniformWithinThreeSigma) {
  Rng r(7);
  constexpr int kDraws = 60000;
  std::vector<int> counts(6);
  for (int i = 0; i < kDraws; ++i) ++counts[r.below(6)];
  const double p = 1.0 / 6.0;
  const double sigma = std::sqrt(kDraws * p * (1 - p));
  for (int c : counts) EXPECT_LT(std::abs(c - kDraws * p), 3 * sigma);
  EXPECT_THROW(r.below(0), std::invalid_argument);
}

TEST(Rng, SerializeRoundTrip) {
  Rng a(9);
  for (int i = 0; i < 17; ++i) a.next_u64();
  Rng b(0);
  b.deserialize(a.serialize());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_THROW(b.deserialize("garbage"), std::runtime_error);
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 20; ++base) {
    for (std::uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(base, s));
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

}  // namespace
}  // namespace cia
