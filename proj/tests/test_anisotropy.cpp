#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace cmflow;

namespace {
const ParamSet kBase{3, 1, 6.0, 6.0};
}

TEST(EvalF, Examples) {
  auto [g, rule] = build_grid(GridKind::FullS2, {16, 32}, 3);
  const ScalarField two = eval_f(AnisotropySpec(ConstantF{2.0}, 3), g);
  for (double v : two.values()) EXPECT_EQ(v, 2.0);

  const AnisotropySpec lh(LinearHarmonic{1.0, 0.05, {0, 0, 1}}, 3);
  const ScalarField f = eval_f(lh, g);
  for (std::size_t i = 0; i < f.size(); ++i)
    EXPECT_NEAR(f[i], 1.0 + 0.05 * g->cos_theta(g->row_of(i)), 1e-15);
  EXPECT_NEAR(lh.floor(), 0.95, 1e-15);

  EXPECT_THROW(AnisotropySpec(LinearHarmonic{1.0, 1.5, {0, 0, 1}}, 3), ConfigError);
  EXPECT_THROW(AnisotropySpec(ConstantF{0.0}, 3), ConfigError);
}

TEST(EvalF, CosinePolyIsChebyshevInXn) {
  const AnisotropySpec s(AxisymCosinePoly{{1.0, 0.0, 0.0, 0.0, 0.9}}, 3);
  for (double th : {0.0, 0.3, 1.1, 2.0, std::numbers::pi}) {
    const std::vector<double> x{std::sin(th), 0.0, std::cos(th)};
    EXPECT_NEAR(s(x), 1.0 + 0.9 * std::cos(4 * th), 1e-14);
  }
  EXPECT_NEAR(s.floor(), 0.1, 1e-9);
  EXPECT_TRUE(s.is_axisymmetric());
}

TEST(ConditionA, ConstantPassesWithMarginThree) {
  const ConditionAReport r = condition_A_margin(AnisotropySpec(ConstantF{1.0}, 3), kBase, 64, 128);
  EXPECT_NEAR(r.min_margin, 3.0, 1e-9);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_DOUBLE_EQ(r.constant_term, 3.0);
  EXPECT_DOUBLE_EQ(r.fs2_coefficient, 7.0 / 3.0);
  EXPECT_GE(r.circles, 64);
}

TEST(ConditionA, ConstantIsRotationInvariant) {
  // Every sample of a constant f gives the same value.
  const AnisotropySpec s(ConstantF{1.7}, 3);
  const ConditionAReport a = condition_A_margin(s, kBase, 64, 128);
  const ConditionAReport b = condition_A_margin(s, kBase, 200, 256);
  EXPECT_NEAR(a.min_margin, 3.0 * 1.7, 1e-12);
  EXPECT_NEAR(b.min_margin, a.min_margin, 1e-12);
}

// On a meridian f = 1 + 0.9 cos(4s); minimize the closed form directly.
TEST(ConditionA, CosineFourFails) {
  const AnisotropySpec s(AxisymCosinePoly{{1.0, 0.0, 0.0, 0.0, 0.9}}, 3);
  const ConditionAReport r = condition_A_margin(s, kBase, 96, 256);
  double oracle_min = 1e300;
  for (int j = 0; j < 200000; ++j) {
    const double t = 2 * std::numbers::pi * j / 200000;
    const double f = 1 + 0.9 * std::cos(4 * t), fs = -3.6 * std::sin(4 * t), fss = -14.4 * std::cos(4 * t);
    oracle_min = std::min(oracle_min, fss - 7.0 / 3.0 * fs * fs / f + 3 * f);
  }
  EXPECT_LE(r.min_margin, -8.7);
  EXPECT_EQ(r.verdict, Verdict::Fail);
  EXPECT_EQ(r.exit_code(), 1);
  // Sampling only ever overestimates the minimum of the meridian profile.
  EXPECT_GE(r.min_margin, oracle_min - 1e-9);
  EXPECT_LE(r.min_margin, oracle_min + 0.2);
}

TEST(ConditionA, LinearHarmonicMarginMatchesOneDimensionalOracle) {
  const AnisotropySpec s(LinearHarmonic{1.0, 0.05, {0, 0, 1}}, 3);
  const ConditionAReport r = condition_A_margin(s, kBase, 96, 256);
  double oracle_min = 1e300;
  for (int j = 0; j < 100000; ++j) {
    const double t = 2 * std::numbers::pi * j / 100000;
    const double f = 1 + 0.05 * std::cos(t), fs = -0.05 * std::sin(t);
    oracle_min = std::min(oracle_min, 2 * f + 1 - 7.0 / 3.0 * fs * fs / f);
  }
  EXPECT_NEAR(oracle_min, 2.9, 1e-9);
  EXPECT_NEAR(r.min_margin, oracle_min, 1e-9);
  EXPECT_GE(r.min_margin, 2.88);
  EXPECT_LE(r.min_margin, 2.91);
  EXPECT_EQ(r.verdict, Verdict::Pass);
}

TEST(ConditionA, RefinementStable) {
  const AnisotropySpec s(LinearHarmonic{1.0, 0.05, {0.3, 0.4, 0.866}}, 3);
  const double a = condition_A_margin(s, kBase, 64, 128).min_margin;
  const double b = condition_A_margin(s, kBase, 64, 256).min_margin;
  EXPECT_LT(std::abs(a - b), 1e-6);
}

TEST(ConditionA, Preconditions) {
  const AnisotropySpec s(ConstantF{1.0}, 3);
  EXPECT_THROW(condition_A_margin(s, kBase, 63, 128), ConfigError);
  EXPECT_THROW(condition_A_margin(s, kBase, 64, 127), ConfigError);
  EXPECT_THROW(condition_A_margin(s, ParamSet{3, 1, 4.0, 3.0}, 64, 128), ConfigError);
}

TEST(ConditionA, HigherDimensionConstant) {
  const ParamSet ps{5, 2, 8.0, 9.0};
  const ConditionAReport r = condition_A_margin(AnisotropySpec(ConstantF{2.0}, 5), ps, 64, 128);
  EXPECT_NEAR(r.min_margin, 2.0 * ps.condition_a_constant(), 1e-12);
}

TEST(ConditionA, TabulatedAgreesWithClosedForm) {
  auto [g, rule] = build_grid(GridKind::FullS2, {64, 128}, 3);
  const AnisotropySpec exact(LinearHarmonic{1.0, 0.05, {0, 0, 1}}, 3);
  const AnisotropySpec tab(TabulatedF{eval_f(exact, g)}, 3);
  const ConditionAReport r = condition_A_margin(tab, kBase, 64, 128);
  EXPECT_NEAR(r.min_margin, 2.9, 0.02);
  EXPECT_NE(r.verdict, Verdict::Fail);
  EXPECT_GE(r.interpolation_error, 0.0);
}

// f = 1 + eps cos(4 theta): the exact margin crosses zero near eps = 3/13.
TEST(ConditionA, TabulatedVerdictsIncludeInconclusive) {
  auto [g, rule] = build_grid(GridKind::FullS2, {32, 64}, 3);
  auto verdict = [&](double eps) {
    const AnisotropySpec exact(AxisymCosinePoly{{1.0, 0.0, 0.0, 0.0, eps}}, 3);
    return condition_A_margin(AnisotropySpec(TabulatedF{eval_f(exact, g)}, 3), kBase, 64, 128);
  };
  const ConditionAReport near_zero = verdict(3.0 / 13.0);
  EXPECT_EQ(near_zero.verdict, Verdict::Inconclusive);
  EXPECT_EQ(near_zero.exit_code(), 2);
  EXPECT_LE(std::abs(near_zero.min_margin), 10.0 * near_zero.interpolation_error);
  EXPECT_EQ(verdict(0.1).verdict, Verdict::Pass);
  EXPECT_EQ(verdict(0.25).verdict, Verdict::Fail);
}
