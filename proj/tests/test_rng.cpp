#include "latwalk/rng.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace latwalk {
namespace {

// Published Philox4x32-10 reference vectors (Random123 known-answer tests).
TEST(Philox, KnownAnswerVectors) {
  const auto zero = Philox::round10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(zero[0], 0x6627e8d5u);
  EXPECT_EQ(zero[1], 0xe169c58du);
  EXPECT_EQ(zero[2], 0xbc57ac4cu);
  EXPECT_EQ(zero[3], 0x9b00dbd8u);

  const std::uint32_t m = 0xffffffffu;
  const auto ones = Philox::round10({m, m, m, m}, {m, m});
  EXPECT_EQ(ones[0], 0x408f276du);
  EXPECT_EQ(ones[1], 0x41c83b0eu);
  EXPECT_EQ(ones[2], 0xa20bc7c6u);
  EXPECT_EQ(ones[3], 0x6d5451fdu);

  const auto pi = Philox::round10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                  {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi[0], 0xd16cfe09u);
  EXPECT_EQ(pi[1], 0x94fdccebu);
  EXPECT_EQ(pi[2], 0x5001e420u);
  EXPECT_EQ(pi[3], 0x24126ea1u);
}

TEST(Philox, FirstBlockMatchesKeyedBijection) {
  Philox rng(0, 0);
  const auto expected = Philox::round10({0, 0, 0, 0}, {0, 0});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(rng(), expected[i]);
}

TEST(Philox, StreamsAreDeterministicAndDistinct) {
  Philox a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  int agree_c = 0, agree_d = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    agree_c += va == c();
    agree_d += va == d();
  }
  EXPECT_LT(agree_c, 4);
  EXPECT_LT(agree_d, 4);
}

TEST(Philox, UniformMomentsAndRange) {
  Philox rng(2024, 0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 0.005);
  EXPECT_NEAR(var, 1.0 / 12.0, 0.005);
}

TEST(Philox, NormalMoments) {
  Philox rng(7, 1);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    ASSERT_TRUE(std::isfinite(x));
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.03);
}

TEST(SeedDerivation, DistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const std::uint64_t s = derive_seed(99, k);
    EXPECT_EQ(s, derive_seed(99, k));
    seen.insert(s);
  }
  EXPECT_EQ(seen.size(), 1000u);
}

}  // namespace
}  // namespace latwalk
