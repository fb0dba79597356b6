#include "fbflow/suites.hpp"
#include "fbflow/vexp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fbflow;

namespace {
const Grid unit1 = Grid::line(0.0, 1.0, 101);
const Grid unit2 = Grid::rect({0, 0}, {1, 1}, {33, 33});
} // namespace

TEST(Modular, Zero) { EXPECT_EQ(modular(ScalarField(unit2), ExponentField::constant(unit2, 2.5)).value, 0.0); }

TEST(Modular, ConstantTwoSquared) {
    EXPECT_NEAR(modular(ScalarField(unit2, 2.0), ExponentField::constant(unit2, 2.0)).value, 4.0, 1e-12);
}

TEST(Modular, LinearSquaredIsOneThird) {
    const Grid g = Grid::line(0.0, 1.0, 257);
    const auto u = ScalarField::sample(g, [](Point x) { return x[0]; });
    const double h = g.h()[0];
    EXPECT_NEAR(modular(u, ExponentField::constant(g, 2.0)).value, 1.0 / 3.0, h * h);
}

TEST(Luxemburg, Zero) { EXPECT_EQ(luxemburg_norm(ScalarField(unit1), ExponentField::constant(unit1, 3.0)), 0.0); }

TEST(Luxemburg, ConstantOneP3) {
    EXPECT_NEAR(luxemburg_norm(ScalarField(unit1, 1.0), ExponentField::constant(unit1, 3.0)), 1.0, 1e-10);
}

TEST(Luxemburg, ConstantTwoP2) {
    EXPECT_NEAR(luxemburg_norm(ScalarField(unit2, 2.0), ExponentField::constant(unit2, 2.0)), 2.0, 1e-10);
}

TEST(Luxemburg, ConstantExponentMatchesLp) {
    const auto u = ScalarField::sample(unit1, [](Point x) { return 1.0 + std::sin(5 * x[0]); });
    const auto p = ExponentField::constant(unit1, 2.5);
    const double lp = std::pow(modular(u, p).value, 1.0 / 2.5);
    EXPECT_NEAR(luxemburg_norm(u, p), lp, 1e-10 * lp);
}

TEST(DualExponent, Examples) {
    EXPECT_NEAR(dual_exponent(ExponentField::constant(unit1, 2.0))[3], 2.0, 1e-15);
    EXPECT_NEAR(dual_exponent(ExponentField::constant(unit1, 3.0))[3], 1.5, 1e-15);
    EXPECT_NEAR(dual_exponent(ExponentField::constant(unit1, 1.25))[3], 5.0, 1e-12);
}

TEST(Sandwich, ConstantExponentCoincides) {
    const auto u = ScalarField::sample(unit1, [](Point x) { return 0.3 + x[0]; });
    const auto s = check_norm_modular_sandwich(u, ExponentField::constant(unit1, 3.0));
    EXPECT_NEAR(s.lhs, s.rhs, 1e-14);
    EXPECT_NEAR(s.norm, s.lhs, 1e-10);
}

TEST(Sandwich, ModularOneGivesOne) {
    const auto p = ExponentField(ScalarField::sample(unit1, [](Point x) { return 2.0 + 0.5 * x[0]; }));
    const auto s = check_norm_modular_sandwich(ScalarField(unit1, 1.0), p);
    EXPECT_NEAR(s.lhs, 1.0, 1e-12);
    EXPECT_NEAR(s.rhs, 1.0, 1e-12);
    EXPECT_TRUE(s.holds());
}

TEST(Sandwich, RandomFieldsVariableExponent) {
    std::mt19937_64 rng(7);
    const auto p = ExponentField(ScalarField::sample(unit1, [](Point x) { return 2.0 + 0.5 * x[0]; }));
    for (int k = 0; k < 200; ++k) EXPECT_TRUE(check_norm_modular_sandwich(detail::random_field(unit1, rng), p).holds());
}

TEST(Holder, ZeroFunction) {
    const auto p = ExponentField::constant(unit1, 2.0);
    const auto h = check_holder(ScalarField(unit1), ScalarField(unit1, 1.0), p);
    EXPECT_EQ(h.lhs, 0.0);
    EXPECT_TRUE(h.holds());
}

TEST(Holder, OnesGiveOneAndTwo) {
    const auto h = check_holder(ScalarField(unit1, 1.0), ScalarField(unit1, 1.0), ExponentField::constant(unit1, 2.0));
    EXPECT_NEAR(h.lhs, 1.0, 1e-12);
    EXPECT_NEAR(h.rhs, 2.0, 1e-9);
}

TEST(Holder, RandomPairsVariableExponent) {
    std::mt19937_64 rng(11);
    const auto p = ExponentField(ScalarField::sample(unit2, [](Point x) { return 1.5 + x[0] + 0.5 * x[1]; }));
    for (int k = 0; k < 100; ++k)
        EXPECT_TRUE(check_holder(detail::random_field(unit2, rng), detail::random_field(unit2, rng), p).holds());
}

TEST(Poincare, ZeroRatioIsZero) {
    EXPECT_EQ(check_poincare(ScalarField(unit1), ExponentField::constant(unit1, 2.0)).ratio, 0.0);
}

TEST(Poincare, SineEigenfunction) {
    const Grid g = Grid::line(0.0, 1.0, 257);
    const auto u = ScalarField::sample(g, [](Point x) { return std::sin(std::numbers::pi * x[0]); });
    const double r = check_poincare(u, ExponentField::constant(g, 2.0)).ratio;
    EXPECT_NEAR(r * std::numbers::pi, 1.0, 0.02);
}

TEST(Poincare, NonzeroBoundaryRejected) {
    EXPECT_THROW(check_poincare(ScalarField(unit1, 1.0), ExponentField::constant(unit1, 2.0)), PreconditionError);
}

TEST(VexpSuite, Passes) {
    const SuiteResult r = vexp_suite(42, 200);
    EXPECT_TRUE(r.pass) << r.summary;
}
