#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "comprof/rng.hpp"

using comprof::Rng;

TEST(Rng, SameSeedSameSequence) {
  Rng a(7, 3), b(7, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer) {
  Rng a(7, 0), b(7, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a() == b();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, SplitDoesNotAdvanceParent) {
  Rng a(5, 0), b(5, 0);
  Rng child = a.split(9);
  (void)child();
  EXPECT_EQ(a(), b());
  Rng again = b.split(9);
  Rng child2 = Rng(5, 0).split(9);
  EXPECT_EQ(again(), child2());
}

TEST(Rng, StateRoundTripResumesExactly) {
  Rng a(11, 2);
  for (int i = 0; i < 37; ++i) (void)a();
  Rng b = Rng::from_state(a.state());
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, UniformIsOpenUnitIntervalWithCorrectMean) {
  Rng rng(1, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // 5 standard errors of a U(0,1) mean.
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, NormalAndExponentialMoments) {
  Rng rng(2, 0);
  const int n = 200000;
  double s = 0, s2 = 0, e = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    e += rng.exponential();
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
  EXPECT_NEAR(e / n, 1.0, 0.02);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(3, 0);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
  EXPECT_EQ(Rng(4, 0).below(1), 0u);
}
