#include "fbflow/energy.hpp"
#include "fbflow/fbanalysis.hpp"
#include "fbflow/oracles.hpp"
#include "fbflow/suites.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fbflow;

TEST(BetaEps, VanishesOutsideSupport) {
    const auto b = BetaProfile::polynomial();
    for (double eps : {1.0, 0.1}) {
        EXPECT_EQ(beta_eps(-1.0, eps, b), 0.0);
        EXPECT_EQ(beta_eps(2.0 * eps, eps, b), 0.0);
    }
}

TEST(BetaEps, MidpointValue) {
    const auto b = BetaProfile::polynomial();
    for (double eps : {1.0, 0.1, 0.01}) EXPECT_NEAR(beta_eps(eps / 2, eps, b), 1.5 / eps, 1e-12 / eps);
}

TEST(BetaEps, MassByQuadrature) {
    using boost::math::quadrature::gauss_kronrod;
    for (const auto& b : {BetaProfile::polynomial(), BetaProfile::smoothstep()}) {
        for (double eps : {1.0, 0.1, 0.01}) {
            const double m = gauss_kronrod<double, 31>::integrate([&](double s) { return beta_eps(s, eps, b); }, 0.0, eps);
            EXPECT_NEAR(m, 1.0, 1e-8);
        }
    }
}

TEST(BetaEps, NonPositiveEpsRejected) { EXPECT_THROW(beta_eps(0.1, 0.0, BetaProfile::polynomial()), ContractError); }

TEST(BEps, Examples) {
    const auto b = BetaProfile::polynomial(2.0);
    EXPECT_EQ(B_eps(-0.3, 0.1, b), 0.0);
    EXPECT_EQ(B_eps(0.0, 0.1, b), 0.0);
    EXPECT_EQ(B_eps(0.1, 0.1, b), 2.0);
    EXPECT_EQ(B_eps(5.0, 0.1, b), 2.0);
    EXPECT_NEAR(B_eps(0.05, 0.1, b), 1.0, 1e-15);
}

TEST(BetaProfile, CustomShapeRescaledToMass) {
    const auto b = BetaProfile::custom([](double s) { return std::sin(3.141592653589793 * s); }, 3.0);
    EXPECT_NEAR(b.primitive(1.0), 3.0, 1e-12);
    EXPECT_NEAR(b.primitive(0.5), 1.5, 1e-9);
}

TEST(BetaProfile, InvalidMassRejected) {
    EXPECT_THROW(BetaProfile::polynomial(0.0), ContractError);
    EXPECT_THROW(BetaProfile::by_name("tophat", 1.0), ContractError);
}

namespace {
const Grid strip = Grid::rect({-1, 0}, {2, 1}, {129, 65});

ProblemData sharp_data(double p, double lam) {
    return ProblemData::sharp(ExponentField::constant(strip, p), ScalarField(strip, lam), ScalarField(strip));
}
} // namespace

TEST(EnergyJ, ZeroField) {
    const auto e = energy_J(ScalarField(strip), sharp_data(2.0, 0.5));
    EXPECT_EQ(e.gradient_term, 0.0);
    EXPECT_EQ(e.interface_term, 0.0);
    EXPECT_EQ(e.forcing_term, 0.0);
    EXPECT_EQ(e.total, 0.0);
}

TEST(EnergyJ, PlanarHalfLambda) {
    const auto u = ScalarField::sample(strip, [](Point x) { return std::max(0.0, x[0]); });
    const auto e = energy_J(u, sharp_data(2.0, 0.5));
    const double h = strip.min_h();
    EXPECT_NEAR(e.gradient_term, 0.5, 2 * h);
    EXPECT_NEAR(e.interface_term, 0.5, 2 * h);
    EXPECT_NEAR(e.total, 1.0, 2 * h);
}

TEST(EnergyJ, PlanarP3) {
    const double alpha = lambda_star(3.0, 1.0);
    const auto u = ScalarField::sample(strip, [&](Point x) { return alpha * std::max(0.0, x[0]); });
    EXPECT_NEAR(energy_J(u, sharp_data(3.0, 1.0)).total, 1.5, 4 * strip.min_h());
}

TEST(EnergyJ, LambdaMustBePositive) { EXPECT_THROW(sharp_data(2.0, 0.0), ContractError); }

TEST(EnergyJeps, ZeroField) {
    const auto d = ProblemData::regularized(ExponentField::constant(strip, 2.0), BetaProfile::polynomial(), 0.1,
                                            ScalarField(strip));
    EXPECT_EQ(energy_Jeps(ScalarField(strip), d).total, 0.0);
}

TEST(EnergyJeps, SaturatedInterface) {
    const auto d = ProblemData::regularized(ExponentField::constant(strip, 2.0), BetaProfile::polynomial(1.7), 0.1,
                                            ScalarField(strip));
    const auto e = energy_Jeps(ScalarField(strip, 0.5), d);
    EXPECT_NEAR(e.interface_term, 1.7 * strip.measure(), 1e-12);
    EXPECT_EQ(e.gradient_term, 0.0);
}

TEST(EnergyJeps, OdeProfileMatchesQuadrature) {
    // Along the profile (p-1)/p |u'|^p = B_eps(u), so the energy density is |u'|^p and
    // J_eps = integral over heights of phi(s)^{p-1} ds with phi(s) = lambda* (B_eps(s)/M)^{1/p}.
    const double p = 2.0, eps = 0.1, b = 1.0;
    const auto beta = BetaProfile::polynomial();
    const Grid g = Grid::line(0.0, 1.0, 8193);
    const ScalarField u = ode_profile_1d(p, eps, beta, g, b);
    const auto d = ProblemData::regularized(ExponentField::constant(g, p), beta, eps, ScalarField(g));
    const double ls = lambda_star(p, 1.0);
    using boost::math::quadrature::gauss_kronrod;
    auto phi_pm1 = [&](double s) { return std::pow(ls * std::pow(B_eps(s, eps, beta), 1.0 / p), p - 1.0); };
    const double exact = gauss_kronrod<double, 61>::integrate(phi_pm1, 0.0, eps, 10, 1e-14) +
                         gauss_kronrod<double, 61>::integrate(phi_pm1, eps, b, 10, 1e-14);
    EXPECT_NEAR(energy_Jeps(u, d).total, exact, 1e-6);
}

TEST(Flux, LinearCase) {
    const auto d = ProblemData::sharp(ExponentField::constant(strip, 2.0), ScalarField(strip, 1.0), ScalarField(strip),
                                      ScalarField(strip, 3.0));
    const Point f = flux(d, {3, 4}, {0.5, -2.0});
    EXPECT_DOUBLE_EQ(f[0], 1.5);
    EXPECT_DOUBLE_EQ(f[1], -6.0);
}

TEST(Flux, ZeroGradient) {
    const Point f = flux(sharp_data(3.0, 1.0), {1, 1}, {0.0, 0.0});
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 0.0);
}

TEST(Flux, CubicCase) {
    const Point f = flux(sharp_data(3.0, 1.0), {1, 1}, {2.0, 0.0});
    EXPECT_DOUBLE_EQ(f[0], 4.0);
    EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(Monotonicity, QuadraticEquality) {
    const auto m = check_monotonicity({0.3, -1.2}, {2.0, 0.7}, 2.0);
    EXPECT_NEAR(m.lhs, m.rhs, 1e-14);
    EXPECT_NEAR(m.ratio(), 1.0, 1e-14);
}

TEST(Monotonicity, EqualArguments) {
    const auto m = check_monotonicity({0.3, -1.2}, {0.3, -1.2}, 3.0);
    EXPECT_EQ(m.lhs, 0.0);
    EXPECT_EQ(m.rhs, 0.0);
}

TEST(Monotonicity, RandomPairs) {
    const SuiteResult r = monotonicity_suite(42, 10000);
    EXPECT_TRUE(r.pass) << r.summary;
}

TEST(Gradient, FiniteDifferences) {
    const SuiteResult r = gradient_suite(42, 20);
    EXPECT_TRUE(r.pass) << r.summary;
}

TEST(Gradient, FivePointLaplacian) {
    const Grid g = Grid::rect({0, 0}, {1, 0.5}, {17, 9});
    const auto d =
        ProblemData::regularized(ExponentField::constant(g, 2.0), BetaProfile::polynomial(), 1.0, ScalarField(g));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, -0.5);  // negative: B_eps vanishes
    const auto u = ScalarField::sample(g, [&](Point) { return U(rng); });
    const ScalarField grad = grad_energy_Jeps(u, d, 0.0);
    const double hx = g.h()[0], hy = g.h()[1];
    for (std::size_t i = 1; i + 1 < g.n()[0]; ++i) {
        for (std::size_t j = 1; j + 1 < g.n()[1]; ++j) {
            const double lap = (2 * u.at(i, j) - u.at(i - 1, j) - u.at(i + 1, j)) / (hx * hx) +
                               (2 * u.at(i, j) - u.at(i, j - 1) - u.at(i, j + 1)) / (hy * hy);
            EXPECT_NEAR(grad.at(i, j), lap * g.cell_volume(), 1e-12);
        }
    }
}
