#include <gtest/gtest.h>

#include "morsehom/growth.hpp"
#include "test_support.hpp"

#include <numbers>

namespace morsehom {
namespace {

using testing_support::rayleigh_oracle;

TEST(Spectrum, ClassicalLaplacian) {
  const auto sp = plaplace_spectrum_1d(2.0, 1.0, 5);
  EXPECT_NEAR(sp[0], 9.8696, 1e-4);
  for (int k = 1; k <= 5; ++k) {
    const double exact = k * k * std::numbers::pi * std::numbers::pi;
    EXPECT_NEAR(sp[k - 1] / exact, 1.0, 1e-6);
  }
  const auto half = plaplace_spectrum_1d(2.0, 0.5, 1);
  EXPECT_NEAR(half[0] / (4.0 * sp[0]), 1.0, 1e-6);
}

TEST(Spectrum, PEqualsThreeAgreesWithRayleighOracle) {
  const auto sp = plaplace_spectrum_1d(3.0, 1.0, 3);
  EXPECT_NEAR(sp[0], 28.29, 1e-2);
  // P1 error is O(h^2); Richardson on two meshes brings it well below 1e-4.
  const double coarse = rayleigh_oracle(3.0, 1.0, 200, 1);
  const double fine = rayleigh_oracle(3.0, 1.0, 400, 1);
  const double extrapolated = (4.0 * fine - coarse) / 3.0;
  EXPECT_NEAR(fine / sp[0], 1.0, 1e-3);
  EXPECT_NEAR(extrapolated / sp[0], 1.0, 1e-4);
}

TEST(Spectrum, HomogeneityScaling) {
  const auto sp = plaplace_spectrum_1d(3.0, 1.0, 3);
  EXPECT_NEAR(sp[1] / sp[0], 8.0, 8e-6);
  EXPECT_NEAR(sp[2] / sp[0], 27.0, 27e-6);
  // Second mode also against the oracle.
  const double coarse = rayleigh_oracle(3.0, 1.0, 200, 2);
  const double fine = rayleigh_oracle(3.0, 1.0, 400, 2);
  EXPECT_NEAR((4.0 * fine - coarse) / 3.0 / sp[1], 1.0, 1e-4);
}

TEST(Spectrum, RejectsBadArguments) {
  EXPECT_THROW(plaplace_spectrum_1d(1.0, 1.0, 1), InvalidInput);
  EXPECT_THROW(plaplace_spectrum_1d(3.0, 0.0, 1), InvalidInput);
  EXPECT_THROW(plaplace_spectrum_1d(3.0, 1.0, 0), InvalidInput);
}

TEST(Resonance, FlagFlipsAcrossFirstEigenvalue) {
  const auto sp = plaplace_spectrum_1d(3.0, 1.0, 3);
  const double l1 = sp[0];
  EXPECT_TRUE(is_resonant(l1, sp));
  EXPECT_TRUE(is_resonant(l1 * (1 + 0.9e-3), sp));
  EXPECT_FALSE(is_resonant(l1 * (1 + 1.1e-3), sp));
  EXPECT_FALSE(is_resonant(l1 * (1 - 1.1e-3), sp));
  // Bisect the flag boundary above lambda_1: it sits at relative distance 1e-3.
  double lo = l1, hi = 1.5 * l1;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (is_resonant(mid, sp) ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo / l1 - 1.0, 1e-3, 1e-9);
}

TEST(Classify, DefinitionThresholds) {
  const auto sub = classify_growth(GModel::power(1.0, 1.0), 3.0, 1);
  EXPECT_EQ(sub.tag, GrowthTag::Sublinear);
  EXPECT_DOUBLE_EQ(sub.threshold_low, 1.0);

  const auto lin = classify_growth(GModel::p_linear(5.0, 3.0), 3.0, 1);
  EXPECT_EQ(lin.tag, GrowthTag::Linear);
  EXPECT_DOUBLE_EQ(*lin.lambda, 5.0);

  const auto sup = classify_growth(GModel::power(1.0, 4.0), 3.0, 3);
  EXPECT_EQ(sup.tag, GrowthTag::Superlinear);
  EXPECT_TRUE(std::isinf(sup.threshold_high));
  EXPECT_GT(sup.ratios[2], sup.ratios[0]);
}

TEST(Classify, LinearResonance) {
  const auto sp = plaplace_spectrum_1d(3.0, 1.0, 1);
  const auto res = classify_growth(GModel::p_linear(sp[0], 3.0), 3.0, 1, 1.0);
  ASSERT_TRUE(res.resonant);
  EXPECT_TRUE(*res.resonant);
  const auto off = classify_growth(GModel::p_linear(5.0, 3.0), 3.0, 1, 1.0);
  EXPECT_FALSE(*off.resonant);
  EXPECT_FALSE(classify_growth(GModel::p_linear(5.0, 3.0), 3.0, 1).resonant);
}

TEST(Classify, MetadataContradictionRaises) {
  GModel g = GModel::power(1.0, 4.0);
  g.q = 0.0;  // declares sublinear while dg grows like |s|^3
  EXPECT_THROW(classify_growth(g, 3.0, 1), ClassificationConflict);
  GModel h = GModel::power(1.0, 1.5);
  h.q = 1.5;  // declares superlinear while the ratio decays
  EXPECT_THROW(classify_growth(h, 3.0, 1), ClassificationConflict);
  GModel l = GModel::power(1.0, 4.0);
  l.lambda = 1.0;
  EXPECT_THROW(classify_growth(l, 3.0, 1), ClassificationConflict);
}

TEST(Classify, RequiresPAboveTwo) {
  EXPECT_THROW(classify_growth(GModel::zero(), 2.0, 1), InvalidInput);
}

TEST(Superlinear, PowerFiveSatisfiesAllConditions) {
  GModel g = GModel::power(1.0, 4.0);
  g.ar_mu = 5.0;
  g.ar_R = 1.0;
  const auto rep = superlinear_check(g, 3.0);
  EXPECT_TRUE(rep.monotonicity);
  EXPECT_TRUE(rep.lower_bound);
  EXPECT_TRUE(rep.ar_declared);
  EXPECT_TRUE(rep.ar_condition);
}

TEST(Superlinear, OscillatingFailsMonotonicity) {
  const auto rep = superlinear_check(GModel::oscillating(), 3.0);
  EXPECT_FALSE(rep.monotonicity);
  ASSERT_FALSE(rep.monotonicity_failures.empty());
  // Oracle: the ratio 2 + sin(log(1 + s^2)) decreases where cos(log(1 + s^2)) < 0.
  for (double s : rep.monotonicity_failures) {
    const double a = std::abs(s);
    // The drop happened between this point and its grid predecessor; check the
    // derivative sign at the point itself or slightly before.
    const double l = std::log1p(a * a);
    const double l_prev = std::log1p(std::pow(a / std::pow(1e4, 1.0 / 999), 2));
    EXPECT_TRUE(std::cos(l) < 0.0 || std::cos(l_prev) < 0.0) << s;
  }
}

TEST(Superlinear, LowerBoundWithDeclaredAlpha) {
  GModel g = GModel::power_sum({{1.0, 4.0}, {-10.0, 2.0}});
  g.r = 1e-3;
  const auto without = superlinear_check(g, 3.0);
  EXPECT_FALSE(without.lower_bound);
  g.alpha = 10.0 / 3.0;
  const auto with = superlinear_check(g, 3.0);
  EXPECT_TRUE(with.lower_bound);
  // Oracle: G(s) + alpha |s|^3 = |s|^5 / 5 >= 0 exactly.
  EXPECT_GE(with.lower_bound_min, 0.0);
  EXPECT_NEAR(with.lower_bound_min, std::pow(1e-3, 5) / 5.0, 1e-12);
  EXPECT_FALSE(with.ar_declared);
}

}  // namespace
}  // namespace morsehom
