#pragma once

/// @brief Self-check suites shared by the `oracle` command and the acceptance run:
/// lambda* identity, planar energies, 1D ODE profile, brute-force dominance,
/// variable-exponent inequalities, flux monotonicity, comparison and gradient checks.
///
/// Every suite is deterministic for a given seed and returns a machine-readable record.

#include "fbflow/energy.hpp"
#include "fbflow/fbanalysis.hpp"
#include "fbflow/oracles.hpp"
#include "fbflow/solver.hpp"
#include "fbflow/vexp.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace fbflow {

struct SuiteResult {
    std::string name;
    bool pass = false;
    std::string summary;
    nlohmann::json details = nlohmann::json::object();
    double seconds = 0.0;
};

namespace detail {

inline SuiteResult timed(const std::string& name, const std::function<void(SuiteResult&)>& body) {
    SuiteResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Random nodal field with values in [-1, 1] times a log-uniform magnitude in [1e-2, 1e2].
inline ScalarField random_field(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> val(-1.0, 1.0), mag(-2.0, 2.0);
    const double scale = std::pow(10.0, mag(rng));
    return ScalarField::sample(g, [&](Point) { return scale * val(rng); });
}

} // namespace detail

// ---------------------------------------------------------------------------
// lambda*

/// alpha^p (p-1)/p = lambda on the acceptance grid and on random (p, lambda).
inline SuiteResult lambda_star_suite(std::uint64_t seed, std::size_t random_count = 1000) {
    return detail::timed("lambda_star", [&](SuiteResult& r) {
        double worst_grid = 0.0, worst_random = 0.0;
        for (double p : {1.5, 2.0, 3.0, 4.0}) {
            for (double lam : {0.25, 0.5, 1.0, 2.0}) {
                const double a = lambda_star(p, lam);
                worst_grid = std::max(worst_grid, std::abs(std::pow(a, p) * (p - 1.0) / p - lam));
            }
        }
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> P(1.1, 6.0), L(std::log(0.01), std::log(100.0));
        for (std::size_t k = 0; k < random_count; ++k) {
            const double p = P(rng), lam = std::exp(L(rng));
            const double a = lambda_star(p, lam);
            worst_random = std::max(worst_random, std::abs(std::pow(a, p) * (p - 1.0) / p - lam) / std::max(1.0, lam));
        }
        r.pass = worst_grid <= 1e-12 && worst_random <= 1e-12;
        r.details = {{"grid_max_abs_residual", worst_grid}, {"random_max_rel_residual", worst_random},
                     {"random_count", random_count}};
        r.summary = "grid residual " + detail::fmt(worst_grid) + ", random residual " + detail::fmt(worst_random);
    });
}

// ---------------------------------------------------------------------------
// Planar oracle

/// J of the planar field equals lambda p/(p-1) on (-1,1)x(0,1), and bump or
/// threshold competitors with the same boundary data never beat it.
inline SuiteResult planar_suite(std::uint64_t seed, std::size_t m = 64, std::size_t competitors = 20) {
    return detail::timed("planar", [&](SuiteResult& r) {
        const Grid g = Grid::rect({-1.0, 0.0}, {2.0, 1.0}, {2 * m + 1, m + 1});
        const double h = g.min_h();
        std::mt19937_64 rng(seed);
        nlohmann::json rows = nlohmann::json::array();
        bool ok = true;
        double worst_energy = 0.0, worst_gap = std::numeric_limits<double>::infinity();
        for (double p : {1.5, 2.0, 3.0, 4.0}) {
            const double lam = 1.0;
            const ScalarField u = planar_oracle(p, lam, {1.0, 0.0}, 0.0, g);
            const ProblemData data =
                ProblemData::sharp(ExponentField::constant(g, p), ScalarField(g, lam), ScalarField(g));
            const double J = energy_J(u, data).total;
            const double target = planar_energy_density(p, lam);
            const double rel = std::abs(J - target) / target;
            worst_energy = std::max(worst_energy, rel);
            ok = ok && rel <= h;

            // Competitors: compactly supported bumps of either sign, or interior thresholding.
            std::uniform_real_distribution<double> cx(-0.6, 0.6), cy(0.25, 0.75), w(0.05, 0.25), amp(-0.1, 0.1),
                thr(0.05, 0.3);
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < competitors; ++k) {
                ScalarField v = u;
                if (k % 2 == 0) {
                    const Point c{cx(rng), cy(rng)};
                    const double width = w(rng), height = amp(rng);
                    for (std::size_t id = 0; id < v.size(); ++id) {
                        if (g.is_boundary_id(id)) continue;
                        const Index ix = g.node_index(id);
                        const double rr = norm(g.node(ix) - c) / width;
                        if (rr < 1.0) v[id] = std::max(0.0, v[id] + height * (1.0 - rr * rr) * (1.0 - rr * rr));
                    }
                } else {
                    const double t = thr(rng);
                    for (std::size_t id = 0; id < v.size(); ++id)
                        if (!g.is_boundary_id(id) && v[id] <= t) v[id] = 0.0;
                }
                gap = std::min(gap, energy_J(v, data).total - J);
            }
            worst_gap = std::min(worst_gap, gap);
            ok = ok && gap >= -1e-9;
            rows.push_back({{"p", p}, {"J", J}, {"target", target}, {"rel_error", rel}, {"min_competitor_gap", gap}});
        }
        r.pass = ok;
        r.details = {{"h", h}, {"cases", rows}};
        r.summary = "energy rel error " + detail::fmt(worst_energy) + " (tol h), min competitor gap " +
                    detail::fmt(worst_gap);
    });
}

// ---------------------------------------------------------------------------
// 1D ODE profile

/// First integral along the ODE profile with u' from a five-point difference of the
/// profile itself at about 64 nodes; points near the eps-kink are skipped.
inline double ode_first_integral_defect(const OdeProfile1D& prof, const Grid& g) {
    const FirstIntegral1D E = prof.first_integral();
    const double d_stencil = 3e-5;
    const double right = g.origin()[0] + g.extent()[0];
    double worst = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, g.n()[0] / 64);
    for (std::size_t i = 0; i < g.n()[0]; i += stride) {
        const double d = right - g.node(i)[0];
        if (d < 3.0 * d_stencil) continue;
        const double u0 = prof.height(d);
        if (u0 <= 0.0) continue;
        // Skip the kink where u crosses eps (beta' jumps there).
        const double s_lo = prof.height(d + 2.0 * d_stencil), s_hi = prof.height(d - 2.0 * d_stencil);
        if (s_lo <= E.eps && s_hi >= E.eps) continue;
        if (std::abs(u0 - E.eps) < 8.0 * d_stencil * prof.far_slope()) continue;
        const double du = (-prof.height(d - 2 * d_stencil) + 8 * prof.height(d - d_stencil) -
                           8 * prof.height(d + d_stencil) + prof.height(d + 2 * d_stencil)) /
                          (12.0 * d_stencil);
        worst = std::max(worst, std::abs(E.value(u0, du)) / E.beta.mass());
    }
    return worst;
}

/// Far slopes against lambda*, beta independence through M, and E = 0 along the profile.
inline SuiteResult ode_suite(double eps = 0.1, std::size_t n = 513) {
    return detail::timed("ode", [&](SuiteResult& r) {
        const Grid g = Grid::line(0.0, 1.0, n);
        nlohmann::json rows = nlohmann::json::array();
        double worst_slope = 0.0, worst_indep = 0.0, worst_E = 0.0;
        for (double p : {1.5, 2.0, 3.0}) {
            for (double M : {1.0, 2.0}) {
                const OdeProfile1D a(p, eps, BetaProfile::polynomial(M), g, 1.0);
                const OdeProfile1D b(p, eps, BetaProfile::smoothstep(M), g, 1.0);
                const double target = std::pow(p * M / (p - 1.0), 1.0 / p);
                const double sa = a.far_slope(), sb = b.far_slope();
                // The far slope measured from the field on the linear part.
                const auto& fa = a.field();
                const auto& fb = b.field();
                const double measured = (fa.at(n - 1) - fa.at(n - 2)) / g.h()[0];
                const double measured_b = (fb.at(n - 1) - fb.at(n - 2)) / g.h()[0];
                const double e_slope = std::max(std::abs(sa - target), std::abs(measured - target));
                const double e_indep = std::max(std::abs(sa - sb), std::abs(measured - measured_b));
                const double e_E = std::max(ode_first_integral_defect(a, g), ode_first_integral_defect(b, g));
                worst_slope = std::max(worst_slope, e_slope);
                worst_indep = std::max(worst_indep, e_indep);
                worst_E = std::max(worst_E, e_E);
                rows.push_back({{"p", p}, {"M", M}, {"far_slope", sa}, {"measured_far_slope", measured},
                                {"lambda_star", target}, {"beta_gap", e_indep}, {"first_integral_defect", e_E}});
            }
        }
        r.pass = worst_slope <= 1e-8 && worst_indep <= 1e-8 && worst_E <= 1e-10;
        r.details = {{"eps", eps},
                     {"max_slope_error", worst_slope},
                     {"max_beta_gap", worst_indep},
                     {"max_E", worst_E},
                     {"cases", rows}};
        r.summary = "far slope error " + detail::fmt(worst_slope) + ", beta gap " + detail::fmt(worst_indep) +
                    ", |E| " + detail::fmt(worst_E);
    });
}

// ---------------------------------------------------------------------------
// Brute-force dominance

struct DominanceCase {
    std::size_t n = 0;
    double p = 2.0, lambda = 1.0;
    double J_best = 0.0, J_solver = 0.0;
    long fb_best = -1, fb_solver = -1;
    bool dominates = false, agrees = false, converged = false;
};

/// Last node of the zero block touching the left end, or -1 when u(1st interior) > 0.
inline long left_zero_block_end(const ScalarField& u) {
    long last = -1;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > 0.0) break;
        last = static_cast<long>(i);
    }
    return last;
}

/// Continuation on a fine 1D grid whose every k-th node is a coarse node, restricted
/// to the coarse grid, against the brute-force minimizer of the coarse sharp J.
inline DominanceCase dominance_case(std::size_t n, double p, double lam, const SolveConfig& cfg,
                                    std::size_t fine_target = 256) {
    DominanceCase c;
    c.n = n;
    c.p = p;
    c.lambda = lam;
    const Grid coarse = Grid::line(0.0, 1.0, n);
    const std::size_t k = (fine_target + n - 2) / (n - 1);
    const Grid fine = Grid::line(0.0, 1.0, (n - 1) * k + 1);
    // Right value puts the continuum free boundary at x = 0.45.
    const double b = 0.55 * lambda_star(p, lam);

    ScalarField bc(coarse);
    bc.at(n - 1) = b;
    const ProblemData sharp = ProblemData::sharp(ExponentField::constant(coarse, p), ScalarField(coarse, lam),
                                                 ScalarField(coarse));
    const BruteForceResult bf = brute_force_1d(sharp, bc);
    c.J_best = bf.J_best;
    c.fb_best = bf.zero_block ? static_cast<long>(bf.zero_block->second) : -1;

    ScalarField bf_fine(fine);
    bf_fine.at(fine.n()[0] - 1) = b;
    const ProblemData reg = ProblemData::regularized(ExponentField::constant(fine, p), BetaProfile::polynomial(lam), {},
                                                     ScalarField(fine));
    const auto res = minimize_J_continuation(reg, bf_fine, ContinuationSchedule::defaults(bf_fine), cfg);
    c.converged = res.ok();
    ScalarField restricted(coarse);
    for (std::size_t i = 0; i < n; ++i) restricted.at(i) = res.final_u.at(i * k);
    c.J_solver = energy_J(restricted, sharp).total;
    c.fb_solver = left_zero_block_end(restricted);
    c.dominates = c.J_best <= c.J_solver + 1e-9;
    c.agrees = std::abs(c.fb_best - c.fb_solver) <= 1;
    return c;
}

inline SuiteResult bruteforce_suite(const std::vector<std::size_t>& ns = {16, 32, 64},
                                    const std::vector<double>& ps = {1.5, 2.0, 3.0},
                                    const std::vector<double>& lams = {0.25, 1.0}, const SolveConfig& cfg = {}) {
    return detail::timed("bruteforce", [&](SuiteResult& r) {
        nlohmann::json rows = nlohmann::json::array();
        std::size_t total = 0, agree = 0;
        bool dominate = true, converged = true;
        for (std::size_t n : ns) {
            for (double p : ps) {
                for (double lam : lams) {
                    const DominanceCase c = dominance_case(n, p, lam, cfg);
                    ++total;
                    agree += c.agrees ? 1 : 0;
                    dominate = dominate && c.dominates;
                    converged = converged && c.converged;
                    rows.push_back({{"n", n}, {"p", p}, {"lambda", lam}, {"J_best", c.J_best},
                                    {"J_solver", c.J_solver}, {"fb_node_best", c.fb_best},
                                    {"fb_node_solver", c.fb_solver}, {"dominates", c.dominates},
                                    {"fb_agrees", c.agrees}, {"solver_converged", c.converged}});
                }
            }
        }
        const double frac = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
        r.pass = dominate && converged && frac >= 0.9;
        r.details = {{"scope", BruteForceResult{}.scope}, {"agreement_fraction", frac}, {"cases", rows}};
        r.summary = std::string("dominance ") + (dominate ? "holds" : "violated") + ", FB agreement " +
                    std::to_string(agree) + "/" + std::to_string(total) + (converged ? "" : ", solver non-convergence");
    });
}

// ---------------------------------------------------------------------------
// Variable-exponent inequalities

/// Sandwich, Hoelder, homogeneity, dual involution and modular normalization on
/// `count` random fields each, plus the Poincare ratio of sin(pi x).
inline SuiteResult vexp_suite(std::uint64_t seed, std::size_t count = 1000) {
    return detail::timed("vexp", [&](SuiteResult& r) {
        std::mt19937_64 rng(seed);
        const double tol = 1e-12;
        const Grid g1 = Grid::line(0.0, 1.0, 65);
        const Grid g2 = Grid::rect({0.0, 0.0}, {1.0, 1.0}, {17, 17});
        std::size_t v_sandwich = 0, v_holder = 0, v_homog = 0, v_dual = 0, v_norm = 0;
        double worst_homog = 0.0, worst_dual = 0.0, worst_norm = 0.0, max_holder_ratio = 0.0;
        std::uniform_real_distribution<double> pa(1.05, 4.0), pb(0.0, 2.0);
        for (std::size_t k = 0; k < count; ++k) {
            const Grid& g = k % 2 == 0 ? g1 : g2;
            // Variable exponent p(x) = p0 + s x1 (the sandwich example uses 2 + 0.5 x).
            const double p0 = k % 4 == 0 ? 2.0 : pa(rng), s = k % 4 == 0 ? 0.5 : pb(rng);
            const ExponentField p(ScalarField::sample(g, [&](Point x) { return p0 + s * x[0]; }));
            const ScalarField u = detail::random_field(g, rng);
            const ScalarField v = detail::random_field(g, rng);

            if (!check_norm_modular_sandwich(u, p, tol).holds()) ++v_sandwich;
            const HolderCheck hc = check_holder(u, v, p, tol);
            if (!hc.holds()) ++v_holder;
            if (hc.rhs > 0.0) max_holder_ratio = std::max(max_holder_ratio, hc.lhs / hc.rhs);

            const double nu = luxemburg_norm(u, p, tol);
            for (double c : {0.5, 2.0, 10.0}) {
                ScalarField cu = u;
                for (auto& x : cu.values()) x *= -c;
                const double rel = std::abs(luxemburg_norm(cu, p, tol) - c * nu) / (c * nu);
                worst_homog = std::max(worst_homog, rel);
                if (rel > 4.0 * tol) ++v_homog;
            }

            const ExponentField q(ScalarField::sample(g, [&](Point x) { return pa(rng) + 0.0 * x[0]; }));
            const ExponentField qq = dual_exponent(dual_exponent(q));
            double dd = 0.0;
            for (std::size_t id = 0; id < q.field().size(); ++id) dd = std::max(dd, std::abs(qq[id] - q[id]));
            worst_dual = std::max(worst_dual, dd);
            if (dd > 1e-12) ++v_dual;

            ScalarField un = u;
            for (auto& x : un.values()) x /= nu;
            const double m = modular(un, p).value;
            worst_norm = std::max(worst_norm, std::abs(m - 1.0));
            if (m < 1.0 - 10.0 * tol || m > 1.0 + 10.0 * tol) ++v_norm;
        }

        // Poincare: sin(pi x) with p = 2 at h = 1/256.
        const Grid gp = Grid::line(0.0, 1.0, 257);
        const ScalarField sn = ScalarField::sample(gp, [](Point x) { return std::sin(std::numbers::pi * x[0]); });
        ScalarField sn_clean = sn;
        sn_clean.at(0) = 0.0;
        sn_clean.at(256) = 0.0;
        const PoincareCheck pc = check_poincare(sn_clean, ExponentField::constant(gp, 2.0));
        const double poincare_err = std::abs(pc.ratio * std::numbers::pi - 1.0);

        // Empirical Poincare constants for bumps with p = 2 + x under refinement (recorded only).
        nlohmann::json refine = nlohmann::json::array();
        for (std::size_t n : {65, 129, 257}) {
            const Grid gr = Grid::line(0.0, 1.0, n);
            const ExponentField pr(ScalarField::sample(gr, [](Point x) { return 2.0 + x[0]; }));
            std::mt19937_64 brng(seed + 7);
            std::uniform_real_distribution<double> c(0.2, 0.8), w(0.05, 0.2);
            double worst = 0.0;
            for (int b = 0; b < 100; ++b) {
                const double cc = c(brng), ww = std::min({w(brng), cc, 1.0 - cc});
                const ScalarField bump = ScalarField::sample(gr, [&](Point x) {
                    const double t = std::abs(x[0] - cc) / ww;
                    return t < 1.0 ? (1.0 - t * t) * (1.0 - t * t) : 0.0;
                });
                worst = std::max(worst, check_poincare(bump, pr).ratio);
            }
            refine.push_back({{"n", n}, {"max_ratio", worst}});
        }

        r.pass = v_sandwich == 0 && v_holder == 0 && v_homog == 0 && v_dual == 0 && v_norm == 0 &&
                 poincare_err <= 0.02;
        r.details = {{"fields_per_property", count},
                     {"violations",
                      {{"sandwich", v_sandwich},
                       {"holder", v_holder},
                       {"homogeneity", v_homog},
                       {"dual_involution", v_dual},
                       {"modular_normalization", v_norm}}},
                     {"worst", {{"homogeneity_rel", worst_homog}, {"dual", worst_dual}, {"normalization", worst_norm}}},
                     {"max_holder_lhs_over_rhs", max_holder_ratio},
                     {"poincare_sin", {{"ratio", pc.ratio}, {"target", 1.0 / std::numbers::pi}, {"rel_error", poincare_err}}},
                     {"poincare_bump_refinement", refine}};
        r.summary = "violations " + std::to_string(v_sandwich + v_holder + v_homog + v_dual + v_norm) +
                    ", Poincare ratio error " + detail::fmt(poincare_err);
    });
}

// ---------------------------------------------------------------------------
// Monotonicity and comparison

inline SuiteResult monotonicity_suite(std::uint64_t seed, std::size_t pairs = 10000) {
    return detail::timed("monotonicity", [&](SuiteResult& r) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> N(0.0, 1.0);
        std::uniform_real_distribution<double> mag(-3.0, 3.0);
        nlohmann::json rows = nlohmann::json::array();
        bool ok = true;
        for (double p : {1.3, 1.7, 2.5, 4.0}) {
            std::size_t bad = 0;
            double C = 0.0;
            for (std::size_t k = 0; k < pairs; ++k) {
                const double s1 = std::pow(10.0, mag(rng)), s2 = std::pow(10.0, mag(rng));
                const Point xi{s1 * N(rng), s1 * N(rng)}, eta{s2 * N(rng), s2 * N(rng)};
                if (xi == eta) continue;
                const MonotonicityCheck m = check_monotonicity(xi, eta, p);
                if (!(m.rhs > 0.0)) ++bad;
                C = std::max(C, m.ratio());
            }
            ok = ok && bad == 0 && std::isfinite(C);
            rows.push_back({{"p", p}, {"nonpositive_rhs", bad}, {"empirical_C", C}});
        }
        r.pass = ok;
        r.details = {{"pairs_per_p", pairs}, {"cases", rows}};
        r.summary = ok ? "rhs > 0 on all pairs, empirical C finite" : "strict monotonicity violated";
    });
}

inline SuiteResult comparison_suite(std::uint64_t seed, std::size_t instances = 50) {
    return detail::timed("comparison", [&](SuiteResult& r) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        SolveConfig cfg;
        cfg.tol_grad = 1e-9;
        std::size_t ordered = 0, inconclusive = 0;
        for (std::size_t k = 0; k < instances; ++k) {
            const bool two_d = k % 2 == 1;
            const Grid g = two_d ? Grid::rect({0.0, 0.0}, {1.0, 1.0}, {17, 17}) : Grid::line(0.0, 1.0, 65);
            const ExponentField p = two_d ? ExponentField(ScalarField::sample(g, [](Point x) { return 2.0 + 0.5 * x[0]; }))
                                          : ExponentField::constant(g, 2.5);
            const double fval = (U(rng) - 0.5) * 0.5;
            const ProblemData data = ProblemData::sharp(p, ScalarField(g, 1.0), ScalarField(g, fval));
            const double a0 = U(rng), a1 = 2.0 * U(rng), a2 = U(rng);
            ScalarField lo = ScalarField::sample(g, [&](Point x) { return a0 + a1 * x[0] * x[0] - a2 * x[1]; });
            ScalarField hi = lo;
            for (auto& v : hi.values()) v += 0.2 * U(rng);
            try {
                if (check_comparison(data, lo, hi, cfg, 1e-8)) ++ordered;
            } catch (const InconclusiveError&) {
                ++inconclusive;
            }
        }
        r.pass = ordered == instances;
        r.details = {{"instances", instances}, {"ordered", ordered}, {"inconclusive", inconclusive}};
        r.summary = std::to_string(ordered) + "/" + std::to_string(instances) + " ordered";
    });
}

// ---------------------------------------------------------------------------
// Gradient check

/// Central differences of J_eps along random interior directions against <grad, xi>.
inline SuiteResult gradient_suite(std::uint64_t seed, std::size_t directions = 20) {
    return detail::timed("gradient", [&](SuiteResult& r) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-0.5, 1.5), D(-1.0, 1.0);
        const Grid g = Grid::rect({-1.0, 0.0}, {2.0, 1.0}, {33, 17});
        nlohmann::json rows = nlohmann::json::array();
        bool ok = true;
        for (double p : {1.5, 2.0, 3.0}) {
            const ExponentField pf(ScalarField::sample(g, [&](Point x) { return p + 0.1 * x[1]; }));
            const ProblemData data =
                ProblemData::regularized(pf, BetaProfile::polynomial(1.0), 0.7, ScalarField(g, 0.3));
            const ScalarField u = ScalarField::sample(g, [&](Point) { return U(rng); });
            const ScalarField grad = grad_energy_Jeps(u, data, 1e-8);
            double worst = 0.0;
            for (std::size_t k = 0; k < directions; ++k) {
                ScalarField xi(g);
                for (std::size_t id = 0; id < xi.size(); ++id)
                    if (!g.is_boundary_id(id)) xi[id] = D(rng);
                double dir = 0.0;
                for (std::size_t id = 0; id < xi.size(); ++id) dir += grad[id] * xi[id];
                const double t = 1e-6;
                ScalarField up = u, um = u;
                for (std::size_t id = 0; id < xi.size(); ++id) {
                    up[id] += t * xi[id];
                    um[id] -= t * xi[id];
                }
                const double fd = (energy_Jeps(up, data).total - energy_Jeps(um, data).total) / (2.0 * t);
                worst = std::max(worst, std::abs(fd - dir) / std::max(std::abs(dir), 1e-300));
            }
            ok = ok && worst <= 1e-4;
            rows.push_back({{"p", p}, {"max_rel_error", worst}});
        }
        r.pass = ok;
        r.details = {{"directions", directions}, {"delta", 1e-8}, {"cases", rows}};
        r.summary = ok ? "finite differences agree to 1e-4" : "gradient mismatch";
    });
}

} // namespace fbflow
