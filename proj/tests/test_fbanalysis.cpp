#include "fbflow/fbanalysis.hpp"
#include "fbflow/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fbflow;

namespace {
const Grid strip = Grid::rect({-1, 0}, {2, 1}, {129, 65});
const Grid fine_square = Grid::rect({0, 0}, {1, 1}, {257, 257});

ScalarField planar(const Grid& g, double alpha) {
    return ScalarField::sample(g, [&](Point x) { return alpha * std::max(0.0, x[0]); });
}
} // namespace

TEST(LambdaStar, Examples) {
    EXPECT_NEAR(lambda_star(2.0, 0.5), 1.0, 1e-15);
    EXPECT_NEAR(lambda_star(2.0, 2.0), 2.0, 1e-15);
    const double a = lambda_star(3.0, 1.0);
    EXPECT_NEAR(a, 1.1447142425533319, 1e-13);
    EXPECT_NEAR(std::pow(a, 3.0) * 2.0 / 3.0, 1.0, 1e-13);
}

TEST(LambdaStar, InvalidArguments) {
    EXPECT_THROW(lambda_star(1.0, 1.0), ContractError);
    EXPECT_THROW(lambda_star(2.0, 0.0), ContractError);
}

TEST(ExtractFb, PlanarInterface) {
    const auto fb = extract_fb(planar(strip, 1.0));
    ASSERT_FALSE(fb.empty());
    for (const auto& x : fb) EXPECT_LE(std::abs(x[0]), strip.min_h());
}

TEST(ExtractFb, PositiveEverywhereIsEmpty) { EXPECT_TRUE(extract_fb(ScalarField(strip, 1.0)).empty()); }

TEST(ExtractFb, ConeCircle) {
    const Point c{0.5, 0.5};
    const auto u = ScalarField::sample(fine_square, [&](Point x) { return std::max(0.0, 0.3 - norm(x - c)); });
    const auto fb = extract_fb(u);
    ASSERT_GT(fb.size(), 100u);
    double mean = 0.0, worst = 0.0;
    for (const auto& x : fb) {
        mean += norm(x - c);
        worst = std::max(worst, std::abs(norm(x - c) - 0.3));
    }
    mean /= static_cast<double>(fb.size());
    EXPECT_NEAR(mean, 0.3, fine_square.min_h());
    EXPECT_LE(worst, fine_square.min_h());
}

TEST(GradientTrace, ExactPlanar) {
    const auto u = planar(strip, 1.0);
    const auto tr = fb_gradient_trace(u, {0.0, 0.5});
    EXPECT_NEAR(tr.measured_slope, 1.0, 1e-10);
    EXPECT_NEAR(tr.normal[0], 1.0, 1e-12);
}

TEST(GradientTrace, NoPositivePhase) {
    EXPECT_THROW(fb_gradient_trace(ScalarField(strip), {0.0, 0.5}), PreconditionError);
}

TEST(GrowthScan, PlanarExact) {
    const double h = strip.min_h();
    const auto s = growth_scan(planar(strip, 1.7), {0.0, 0.5}, dyadic_ladder(h, 5, 2));
    ASSERT_EQ(s.rows.size(), 4u);
    for (const auto& row : s.rows) EXPECT_NEAR(row.sup_over_r, 1.7, 1e-12);
}

TEST(GrowthScan, ZeroField) {
    const auto s = growth_scan(ScalarField(strip), {0.0, 0.5}, {0.25, 0.125});
    EXPECT_EQ(s.constant, 0.0);
}

TEST(GrowthScan, TrimsRadiiLeavingGrid) {
    const auto s = growth_scan(planar(strip, 1.0), {0.0, 0.1}, {0.4, 0.05});
    EXPECT_TRUE(s.trimmed);
    EXPECT_EQ(s.rows.size(), 1u);
}

TEST(NondegeneracyScan, PlanarForms) {
    const Grid g = Grid::rect({-1, 0}, {2, 1}, {513, 257});
    const double alpha = 1.3;
    const auto s = nondegeneracy_scan(planar(g, alpha), {0.0, 0.5}, {0.25});
    ASSERT_EQ(s.rows.size(), 1u);
    // Unit-disk means of x1^+: 2/(3 pi) over the ball, 1/pi over the circle.
    EXPECT_NEAR(s.rows[0].sup_over_r, alpha, 1e-12);
    EXPECT_NEAR(s.rows[0].ball_mean_over_r / (alpha * 2.0 / (3.0 * std::numbers::pi)), 1.0, 0.02);
    EXPECT_NEAR(s.rows[0].sphere_mean_over_r / (alpha / std::numbers::pi), 1.0, 0.01);
    EXPECT_GT(s.rows[0].ball_mean_over_r, 0.0);
}

TEST(NondegeneracyScan, ZeroFieldDegenerate) {
    const auto s = nondegeneracy_scan(ScalarField(strip), {0.0, 0.5}, {0.25, 0.125});
    EXPECT_EQ(s.constant, 0.0);
}

TEST(DensityScan, PlanarHalf) {
    const double h = strip.min_h();
    const auto s = density_scan(planar(strip, 1.0), {0.0, 0.5}, dyadic_ladder(h, 5, 3));
    for (const auto& row : s.rows) EXPECT_NEAR(row.fraction, 0.5, 0.06);
    EXPECT_NEAR(s.constant, 0.5, 0.06);
}

TEST(DensityScan, PositiveEverywhere) {
    const auto s = density_scan(ScalarField(strip, 1.0), {0.0, 0.5}, {0.25});
    EXPECT_EQ(s.rows[0].fraction, 1.0);
    EXPECT_EQ(s.constant, 0.0);
}

TEST(BlowupFit, ExactPlanar) {
    const auto b = blowup_fit(planar(strip, 1.4), {0.0, 0.5}, 0.25);
    EXPECT_NEAR(b.alpha, 1.4, 1e-10);
    EXPECT_LE(b.residual, 1e-10);
}

TEST(BlowupFit, RotatedNormal) {
    const double th = std::numbers::pi / 6.0;
    const Point nu{std::cos(th), std::sin(th)};
    const Point x0{0.5, 0.5};
    const auto u = ScalarField::sample(fine_square, [&](Point x) { return std::max(0.0, dot(x - x0, nu)); });
    const auto b = blowup_fit(u, x0, 0.25);
    const double angle = std::acos(std::clamp(dot(b.normal, nu), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    EXPECT_LE(angle, 1.0);
    EXPECT_NEAR(b.alpha, 1.0, 0.01);
}

TEST(BallCondition, PlanarInscribedBall) {
    const Grid g = Grid::rect({-1, 0}, {2, 1}, {513, 257});
    const auto d = ProblemData::sharp(ExponentField::constant(g, 2.0), ScalarField(g, 0.5), ScalarField(g));
    const auto rep = ball_condition_check(planar(g, 1.0), {0.0, 0.5}, d);
    ASSERT_TRUE(rep.conclusive);
    EXPECT_NEAR(rep.ell, 1.0, 0.03);
    EXPECT_NEAR(rep.target, 1.0, 1e-15);
}

TEST(BallCondition, ConeSlope) {
    const Point c{0.5, 0.5};
    const double slope = 2.0;
    const auto u = ScalarField::sample(fine_square, [&](Point x) { return slope * std::max(0.0, 0.3 - norm(x - c)); });
    const auto d = ProblemData::sharp(ExponentField::constant(fine_square, 2.0), ScalarField(fine_square, 2.0),
                                      ScalarField(fine_square));
    const auto rep = ball_condition_check(u, {0.8, 0.5}, d);
    ASSERT_TRUE(rep.conclusive);
    EXPECT_NEAR(rep.ell / slope, 1.0, 0.05);
}

TEST(HalfplaneDevelopment, Examples) {
    const Grid g = Grid::rect({0, 0}, {1, 1}, {129, 129});
    const auto lin = ScalarField::sample(g, [](Point x) { return 2.5 * x[1]; });
    EXPECT_NEAR(halfplane_development_check(lin), 2.5, 1e-12);
    const auto quad = ScalarField::sample(g, [](Point x) { return x[1] + x[1] * x[1]; });
    EXPECT_NEAR(halfplane_development_check(quad), 1.0, 4 * g.min_h());
    EXPECT_EQ(halfplane_development_check(ScalarField(g)), 0.0);
    const auto bad = ScalarField::sample(g, [](Point x) { return x[1] + 0.1; });
    EXPECT_THROW(halfplane_development_check(bad), PreconditionError);
}

TEST(Report, PlanarOracleAllChecksPass) {
    const auto d = ProblemData::regularized(ExponentField::constant(strip, 2.0), BetaProfile::polynomial(), {},
                                            ScalarField(strip));
    ReportOptions opt;
    opt.growth_k_max = 4;
    opt.density_k_max = 4;
    opt.blowup_rho_h = 16;
    const auto rep = analyze_free_boundary(planar_oracle(2.0, 1.0, {1, 0}, 0.0, strip), d, opt);
    EXPECT_TRUE(rep.checks.all());
    EXPECT_GE(rep.per_point.size(), 8u);
    EXPECT_LE(rep.max_slope_error, 1e-6);
    const auto j = to_json(rep);
    EXPECT_TRUE(j["checks"]["all"].get<bool>());
    EXPECT_EQ(j["per_point"].size(), rep.per_point.size());
}

TEST(Report, NoFreeBoundary) {
    const auto d = ProblemData::regularized(ExponentField::constant(strip, 2.0), BetaProfile::polynomial(), {},
                                            ScalarField(strip));
    const auto rep = analyze_free_boundary(ScalarField(strip, 1.0), d);
    EXPECT_TRUE(rep.fb_points.empty());
    EXPECT_FALSE(rep.checks.points);
}

TEST(Report, VariableExponentPointwiseTarget) {
    const auto p = ExponentField(ScalarField::sample(strip, [](Point x) { return 2.0 + 0.3 * x[0]; }));
    const auto d = ProblemData::sharp(p, ScalarField(strip, 1.0), ScalarField(strip));
    EXPECT_NEAR(lambda_star_at(d, {0.5, 0.5}), lambda_star(2.15, 1.0), 1e-12);
}
