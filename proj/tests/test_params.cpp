#include "cmflow/params.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cmflow;

TEST(ValidateParams, TheoremWindowExample) {
  const RegimeReport r = validate_params(3, 1, 6.0, 6.0);
  EXPECT_EQ(r.regime, Regime::TheoremWindow);
  EXPECT_TRUE(r.reason.empty());
}

TEST(ValidateParams, C0WindowExample) {
  EXPECT_EQ(validate_params(3, 1, 4.0, 3.0).regime, Regime::C0Window);
}

TEST(ValidateParams, KTooLargeIsInvalid) {
  const RegimeReport r = validate_params(3, 2, 10.0, 8.0);
  EXPECT_EQ(r.regime, Regime::Invalid);
  EXPECT_EQ(r.reason, "k < n-1 violated");
}

TEST(ValidateParams, NamesFirstViolatedInequality) {
  EXPECT_EQ(validate_params(2, 1, 6.0, 6.0).reason, "n >= 3 violated");
  EXPECT_EQ(validate_params(3.5, 1.0, 6.0, 6.0).reason, "n integer violated");
  EXPECT_EQ(validate_params(4.0, 1.5, 6.0, 6.0).reason, "k integer violated");
  EXPECT_EQ(validate_params(3, 0, 6.0, 6.0).reason, "1 <= k violated");
  EXPECT_EQ(validate_params(3, 1, 1.0, 3.0).reason, "p > 1 violated");
  EXPECT_EQ(validate_params(3, 1, 6.0, 2.0).reason, "0 <= q-n violated");
  EXPECT_EQ(validate_params(3, 1, 6.0, 7.0).reason, "q-n < p-k-1 violated");
}

TEST(ValidateParams, BoundariesAreSharp) {
  // q-n = k+1 exactly is outside the theorem window but inside the C0 window.
  EXPECT_EQ(validate_params(3, 1, 6.0, 5.0).regime, Regime::C0Window);
  // q-n = p-k-1 exactly is invalid.
  EXPECT_EQ(validate_params(3, 1, 6.0, 7.0).regime, Regime::Invalid);
  EXPECT_EQ(validate_params(3, 1, 6.0, std::nextafter(7.0, 0.0)).regime, Regime::TheoremWindow);
}

TEST(ValidateParams, WindowConsequencesHoldOnRandomTuples) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> n_dist(3, 9);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  int theorem = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const int n = n_dist(rng);
    std::uniform_int_distribution<int> k_dist(1, n - 2);
    const int k = k_dist(rng);
    const double p = u(rng);
    const double q = n + u(rng) - 5.0;
    const RegimeReport r = validate_params(n, k, p, q);
    const RegimeReport again = validate_params(n, k, p, q);
    EXPECT_EQ(r.regime, again.regime);
    EXPECT_EQ(r.reason, again.reason);
    ParamSet ps{n, k, p, q};
    if (r.regime == Regime::TheoremWindow) {
      ++theorem;
      EXPECT_GT(ps.condition_a_constant(), 2.0 * k);
      EXPECT_GT(ps.condition_a_fs2_coefficient(), 0.0);
      EXPECT_GT(p, 1.0);
      EXPECT_GE(q - n, 0.0);
    }
    if (r.valid()) {
      EXPECT_LT(ps.ratio_exponent(), 0.0);
    }
  }
  EXPECT_GT(theorem, 100);
}

TEST(ParamSet, ConditionACoefficients) {
  const ParamSet ps{3, 1, 6.0, 6.0};
  EXPECT_DOUBLE_EQ(ps.condition_a_constant(), 3.0);
  EXPECT_DOUBLE_EQ(ps.condition_a_fs2_coefficient(), 7.0 / 3.0);
  EXPECT_DOUBLE_EQ(ps.ratio_exponent(), -1.0);
}
