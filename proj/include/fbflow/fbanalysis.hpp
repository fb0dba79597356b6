#pragma once

/// @brief Free-boundary extraction and the quantitative checks run on a solved
/// field: gradient trace toward the free boundary, growth / nondegeneracy / density
/// scans over radius ladders, blow-up fits, the tangent-ball ratio and the
/// half-plane development.

#include "fbflow/energy.hpp"
#include "fbflow/grid.hpp"
#include "fbflow/solver.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fbflow {

/// (p/(p-1) lambda)^{1/p}
inline double lambda_star(double p, double lambda) {
    if (!(p > 1.0)) throw ContractError("lambda_star: p must exceed 1");
    if (!(lambda > 0.0)) throw ContractError("lambda_star: lambda must be positive");
    return std::pow(p / (p - 1.0) * lambda, 1.0 / p);
}

/// Target slope at x for the problem data (lambda replaced by M when regularized).
inline double lambda_star_at(const ProblemData& data, const Point& x) {
    return lambda_star(data.p_at(x), data.lambda_at(x));
}

/// Linear-interpolated crossings of u = threshold on grid edges with one endpoint
/// above the threshold and the other at or below it. Duplicates (a crossing exactly
/// at a shared node) are removed.
inline std::vector<Point> extract_fb(const ScalarField& u, double threshold = 0.0) {
    if (!(threshold >= 0.0)) throw ContractError("extract_fb: threshold must be nonnegative");
    const Grid& g = u.grid();
    std::vector<Point> pts;
    auto edge = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1) {
        const double a = u.at(i0, j0), b = u.at(i1, j1);
        const bool pa = a > threshold, pb = b > threshold;
        if (pa == pb) return;
        const double t = (threshold - a) / (b - a);
        const Point xa = g.node(i0, j0), xb = g.node(i1, j1);
        pts.push_back(xa + t * (xb - xa));
    };
    for (std::size_t i = 0; i < g.n()[0]; ++i) {
        for (std::size_t j = 0; j < g.n()[1]; ++j) {
            if (i + 1 < g.n()[0]) edge(i, j, i + 1, j);
            if (g.dim() == 2 && j + 1 < g.n()[1]) edge(i, j, i, j + 1);
        }
    }
    const double tol = 1e-9 * g.min_h();
    std::sort(pts.begin(), pts.end());
    std::vector<Point> out;
    for (const Point& p : pts) {
        bool dup = false;
        for (auto it = out.rbegin(); it != out.rend() && p[0] - (*it)[0] <= tol; ++it) {
            if (norm(p - *it) <= tol) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(p);
    }
    return out;
}

/// Up to `count` free-boundary points with at least `room` distance to the grid
/// boundary, evenly spread along the sorted list.
inline std::vector<Point> select_fb_points(const std::vector<Point>& fb, const Grid& grid, double room,
                                          std::size_t count) {
    std::vector<Point> ok;
    for (const Point& p : fb)
        if (ScanWindow::room(grid, p) >= room - 1e-12) ok.push_back(p);
    if (ok.size() <= count) return ok;
    std::vector<Point> out;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t idx = (2 * k + 1) * ok.size() / (2 * count);
        out.push_back(ok[idx]);
    }
    return out;
}

/// Unit direction of the mean cell gradient over cells with all corners above
/// `threshold` whose centers lie within `radius` of x0. Zero vector if none.
inline Point positive_phase_normal(const ScalarField& u, const Point& x0, double radius, double threshold = 0.0) {
    const Grid& g = u.grid();
    Point sum{0.0, 0.0};
    const Index lo = g.locate_cell(x0 - Point{radius, g.dim() == 2 ? radius : 0.0});
    const Index hi = g.locate_cell(x0 + Point{radius, g.dim() == 2 ? radius : 0.0});
    for (std::size_t i = lo.i; i <= hi.i; ++i) {
        for (std::size_t j = lo.j; j <= hi.j; ++j) {
            const Index c{i, j};
            if (norm(g.cell_center(c) - x0) > radius) continue;
            bool pos = u.at(i, j) > threshold && u.at(i + 1, j) > threshold;
            if (g.dim() == 2) pos = pos && u.at(i, j + 1) > threshold && u.at(i + 1, j + 1) > threshold;
            if (!pos) continue;
            sum = sum + cell_gradient(u, c);
        }
    }
    const double n = norm(sum);
    return n > 0.0 ? (1.0 / n) * sum : Point{0.0, 0.0};
}

struct GradientTrace {
    double measured_slope = 0.0;
    Point normal{0.0, 0.0};
    std::vector<double> distances;
    std::vector<double> slopes;
    /// RMS misfit of the affine fit relative to the intercept.
    double fit_residual = 0.0;
};

namespace detail {

/// Least-squares line y = a + b x; returns {a, b, rms residual}.
inline std::array<double, 3> affine_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    const double den = n * sxx - sx * sx;
    const double b = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    const double a = (sy - b * sx) / n;
    double rss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) rss += std::pow(y[k] - a - b * x[k], 2);
    return {a, b, std::sqrt(rss / n)};
}

} // namespace detail

/// |grad u| at cell centers along the inward normal at distances 2h, 4h, ..., 2 n h,
/// extrapolated to distance 0 by an affine fit.
inline GradientTrace fb_gradient_trace(const ScalarField& u, const Point& fb_point, std::size_t n_samples = 8,
                                       double threshold = 0.0) {
    if (n_samples < 2) throw ContractError("fb_gradient_trace: need at least 2 samples");
    const Grid& g = u.grid();
    const double h = g.min_h();
    const double reach = 2.0 * static_cast<double>(n_samples) * h;
    GradientTrace tr;
    tr.normal = g.dim() == 1 ? Point{0.0, 0.0} : positive_phase_normal(u, fb_point, reach, threshold);
    if (g.dim() == 1) {
        const Index c = g.locate_cell(fb_point);
        const double right = c.i + 1 < g.n()[0] ? u.at(c.i + 1) : 0.0;
        const double left = u.at(c.i);
        tr.normal = right > left ? Point{1.0, 0.0} : Point{-1.0, 0.0};
    }
    if (norm(tr.normal) == 0.0) throw PreconditionError("fb_gradient_trace: no positive phase near the point");
    for (std::size_t k = 1; k <= n_samples; ++k) {
        const double d = 2.0 * static_cast<double>(k) * h;
        const Point y = fb_point + d * tr.normal;
        if (!g.contains(y)) throw PreconditionError("fb_gradient_trace: not enough positive-phase room");
        const Index c = g.locate_cell(y);
        if (!(u.cell_average(c) > threshold)) throw PreconditionError("fb_gradient_trace: sample left the positive phase");
        tr.distances.push_back(d);
        tr.slopes.push_back(norm(cell_gradient(u, c)));
    }
    const auto fit = detail::affine_fit(tr.distances, tr.slopes);
    tr.measured_slope = fit[0];
    tr.fit_residual = fit[0] != 0.0 ? fit[2] / std::abs(fit[0]) : fit[2];
    return tr;
}

// ---------------------------------------------------------------------------
// Radius-ladder scans

struct RadiusRow {
    double r = 0.0;
    double sup = 0.0;
    double sup_over_r = 0.0;
    double ball_mean_over_r = 0.0;
    double sphere_mean_over_r = 0.0;
    double fraction = 0.0;
    std::size_t nodes = 0;
};

struct ScanResult {
    Point center{};
    std::vector<RadiusRow> rows;
    /// Radii dropped because the ball left the grid.
    bool trimmed = false;
    /// C_max, c_min or c-tilde, depending on the scan.
    double constant = 0.0;
};

namespace detail {

inline std::vector<double> fitting_radii(const Grid& g, const Point& x0, const std::vector<double>& radii, bool& trimmed) {
    const double room = ScanWindow::room(g, x0);
    std::vector<double> out;
    for (double r : radii) {
        if (!(r > 0.0)) throw ContractError("scan radii must be positive");
        if (r <= room + 1e-12) {
            out.push_back(r);
        } else {
            trimmed = true;
        }
    }
    return out;
}

inline double sup_of(const std::vector<BallSample>& s) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& b : s) m = std::max(m, b.value);
    return s.empty() ? 0.0 : m;
}

/// Mean of bilinear samples on the sphere |x - x0| = r (two points in 1D).
inline double sphere_mean(const ScalarField& u, const Point& x0, double r) {
    const Grid& g = u.grid();
    if (g.dim() == 1) return 0.5 * (u.interpolate(x0 + Point{r, 0.0}) + u.interpolate(x0 - Point{r, 0.0}));
    const std::size_t m = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(16.0 * r / g.min_h())));
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double th = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        s += u.interpolate(x0 + Point{r * std::cos(th), r * std::sin(th)});
    }
    return s / static_cast<double>(m);
}

} // namespace detail

/// sup over B_r(x0) divided by r for each radius; constant = C_max.
inline ScanResult growth_scan(const ScalarField& u, const Point& x0, const std::vector<double>& radii) {
    ScanResult out{x0, {}, false, 0.0};
    for (double r : detail::fitting_radii(u.grid(), x0, radii, out.trimmed)) {
        const auto ball = ball_values(u, x0, r);
        RadiusRow row;
        row.r = r;
        row.nodes = ball.size();
        row.sup = detail::sup_of(ball);
        row.sup_over_r = row.sup / r;
        out.constant = std::max(out.constant, row.sup_over_r);
        out.rows.push_back(row);
    }
    return out;
}

/// sup/r plus the ball-mean and sphere-mean forms; constant = c_min of the sup form.
inline ScanResult nondegeneracy_scan(const ScalarField& u, const Point& x0, const std::vector<double>& radii) {
    ScanResult out{x0, {}, false, std::numeric_limits<double>::infinity()};
    for (double r : detail::fitting_radii(u.grid(), x0, radii, out.trimmed)) {
        const auto ball = ball_values(u, x0, r);
        RadiusRow row;
        row.r = r;
        row.nodes = ball.size();
        row.sup = detail::sup_of(ball);
        row.sup_over_r = row.sup / r;
        double mean = 0.0;
        for (const auto& b : ball) mean += b.value;
        row.ball_mean_over_r = ball.empty() ? 0.0 : mean / static_cast<double>(ball.size()) / r;
        row.sphere_mean_over_r = detail::sphere_mean(u, x0, r) / r;
        out.constant = std::min(out.constant, row.sup_over_r);
        out.rows.push_back(row);
    }
    if (out.rows.empty()) out.constant = 0.0;
    return out;
}

/// Fraction of ball nodes with u > threshold; constant = c-tilde = 1 - max fraction.
inline ScanResult density_scan(const ScalarField& u, const Point& x0, const std::vector<double>& radii,
                               double threshold = 0.0) {
    ScanResult out{x0, {}, false, 1.0};
    double max_frac = 0.0;
    for (double r : detail::fitting_radii(u.grid(), x0, radii, out.trimmed)) {
        const auto ball = ball_values(u, x0, r);
        RadiusRow row;
        row.r = r;
        row.nodes = ball.size();
        std::size_t pos = 0;
        for (const auto& b : ball) pos += b.value > threshold ? 1 : 0;
        row.fraction = ball.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(ball.size());
        max_frac = std::max(max_frac, row.fraction);
        out.rows.push_back(row);
    }
    out.constant = 1.0 - max_frac;
    return out;
}

/// h * {2^k_max, ..., 2^k_min}, largest first.
inline std::vector<double> dyadic_ladder(double h, int k_max, int k_min) {
    std::vector<double> r;
    for (int k = k_max; k >= k_min; --k) r.push_back(h * std::ldexp(1.0, k));
    return r;
}

// ---------------------------------------------------------------------------
// Blow-up and tangent balls

struct BlowupFit {
    double rho = 0.0;
    double alpha = 0.0;
    Point normal{0.0, 0.0};
    /// ||u_rho - alpha <x,nu>^+|| / ||alpha <x,nu>^+|| over the unit-ball samples.
    double residual = 0.0;
};

/// Fits u(x0 + rho y)/rho ~ alpha <y, nu>^+ on the unit ball, sampled bilinearly on a
/// lattice of spacing 1/32 (1/256 in 1D).
inline BlowupFit blowup_fit(const ScalarField& u, const Point& x0, double rho, double threshold = 0.0) {
    const Grid& g = u.grid();
    if (!(rho > 0.0)) throw ContractError("blowup_fit: rho must be positive");
    if (ScanWindow::room(g, x0) < rho - 1e-12) throw PreconditionError("blowup_fit: ball exits the grid");
    BlowupFit fit;
    fit.rho = rho;
    if (g.dim() == 1) {
        const double r = u.interpolate(x0 + Point{0.5 * rho, 0.0}), l = u.interpolate(x0 - Point{0.5 * rho, 0.0});
        fit.normal = r >= l ? Point{1.0, 0.0} : Point{-1.0, 0.0};
        if (std::max(r, l) <= threshold) throw PreconditionError("blowup_fit: positive phase empty in the ball");
    } else {
        fit.normal = positive_phase_normal(u, x0, rho, threshold);
        if (norm(fit.normal) == 0.0) throw PreconditionError("blowup_fit: positive phase empty in the ball");
    }
    std::vector<Point> ys;
    const int m = g.dim() == 1 ? 256 : 32;
    for (int a = -m; a <= m; ++a) {
        for (int b = (g.dim() == 1 ? 0 : -m); b <= (g.dim() == 1 ? 0 : m); ++b) {
            const Point y{static_cast<double>(a) / m, static_cast<double>(b) / m};
            if (dot(y, y) <= 1.0) ys.push_back(y);
        }
    }
    double uq = 0.0, qq = 0.0;
    std::vector<double> vals(ys.size()), qs(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) {
        vals[k] = u.interpolate(x0 + rho * ys[k]) / rho;
        qs[k] = std::max(0.0, dot(ys[k], fit.normal));
        uq += vals[k] * qs[k];
        qq += qs[k] * qs[k];
    }
    fit.alpha = std::max(0.0, uq / qq);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
        num += std::pow(vals[k] - fit.alpha * qs[k], 2);
        den += std::pow(fit.alpha * qs[k], 2);
    }
    fit.residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return fit;
}

struct BallConditionReport {
    bool conclusive = false;
    /// max of u(x) / dist(x, B) over positive nodes within 8h of x0.
    double ell = 0.0;
    double target = 0.0;
    Point ball_center{};
    double ball_radius = 0.0;
};

/// Largest ball B = B_R(x0 - R nu) free of nodes with u > threshold, for R on the
/// ladder 2h, 4h, ... up to a quarter of the smallest extent, then the ratio
/// u / dist(., B) near x0. Inconclusive when not even R = 2h fits.
inline BallConditionReport ball_condition_check(const ScalarField& u, const Point& x0, const ProblemData& data,
                                                double threshold = 0.0) {
    const Grid& g = u.grid();
    const double h = g.min_h();
    BallConditionReport rep;
    rep.target = lambda_star_at(data, x0);
    const Point nu = g.dim() == 1 ? (u.interpolate(x0 + Point{2 * h, 0}) >= u.interpolate(x0 - Point{2 * h, 0})
                                         ? Point{1.0, 0.0}
                                         : Point{-1.0, 0.0})
                                  : positive_phase_normal(u, x0, 8.0 * h, threshold);
    if (norm(nu) == 0.0) return rep;
    double r_max = g.extent()[0];
    if (g.dim() == 2) r_max = std::min(r_max, g.extent()[1]);
    r_max *= 0.25;
    for (double R = 2.0 * h; R <= r_max * (1.0 + 1e-12); R *= 2.0) {
        const Point z = x0 - R * nu;
        if (!g.contains(z)) break;
        bool empty = true;
        for (const auto& s : ball_values(u, z, R)) {
            if (s.value > threshold) {
                empty = false;
                break;
            }
        }
        if (!empty) break;
        rep.conclusive = true;
        rep.ball_center = z;
        rep.ball_radius = R;
    }
    if (!rep.conclusive) return rep;
    for (const auto& s : ball_values(u, x0, 8.0 * h)) {
        if (!(s.value > threshold)) continue;
        const double d = norm(s.x - rep.ball_center) - rep.ball_radius;
        if (d > 0.0) rep.ell = std::max(rep.ell, s.value / d);
    }
    return rep;
}

/// Slope alpha of u = alpha x_N + o(|x|) at the center of the flat boundary
/// {x_N = origin_N} from u/t at dyadic heights t = H, H/2, ... >= 2h, extrapolated
/// affinely to t = 0. With `data`, the equation residual on {u > 0} must be at most
/// `residual_tol` (strong form).
inline double halfplane_development_check(const ScalarField& u, const ProblemData* data = nullptr,
                                          double residual_tol = 1e-4) {
    const Grid& g = u.grid();
    const int axis = g.dim() - 1;
    const double scale = std::max(1.0, u.max_abs());
    for (std::size_t id = 0; id < u.size(); ++id) {
        if (u[id] < -1e-12 * scale) throw PreconditionError("halfplane_development_check: u must be nonnegative");
        const Index k = g.node_index(id);
        const std::size_t kn = axis == 0 ? k.i : k.j;
        if (kn == 0 && std::abs(u[id]) > 1e-12 * scale)
            throw PreconditionError("halfplane_development_check: u must vanish on the flat boundary");
    }
    if (data) {
        const auto res = equation_residual(u, *data, 0.0);
        if (res.max_residual > residual_tol)
            throw PreconditionError("halfplane_development_check: equation residual " +
                                    std::to_string(res.max_residual) + " exceeds tolerance");
    }
    Point base = g.origin();
    if (g.dim() == 2) base[0] += 0.5 * g.extent()[0];
    Point e{0.0, 0.0};
    e[axis] = 1.0;
    const double h = g.h()[axis];
    const double H = 0.5 * g.extent()[axis];
    std::vector<double> ts, ys;
    for (double t = H; t >= 2.0 * h - 1e-12; t *= 0.5) {
        ts.push_back(t);
        ys.push_back(u.interpolate(base + t * e) / t);
    }
    if (ts.size() < 2) throw PreconditionError("halfplane_development_check: grid too coarse");
    return std::max(0.0, detail::affine_fit(ts, ys)[0]);
}

// ---------------------------------------------------------------------------
// Report

struct PointRecord {
    Point x{};
    double measured_slope = 0.0;
    double target_lambda_star = 0.0;
    Point normal{};
    double fit_residual = 0.0;
    ScanResult growth;
    ScanResult nondegeneracy;
    ScanResult density;
    std::optional<BlowupFit> blowup;
};

struct ReportOptions {
    std::size_t max_points = 32;
    std::size_t n_samples = 8;
    /// Ladders in units of h, as exponents: growth/nondegeneracy over 2^5..2^2,
    /// density over 2^5..2^3.
    int growth_k_max = 5, growth_k_min = 2;
    int density_k_max = 5, density_k_min = 3;
    /// Blow-up radius in units of h (0 disables).
    double blowup_rho_h = 32.0;
    double threshold = 0.0;
    /// Pass bands.
    double slope_tol = 0.05;
    double growth_lo = 0.9, growth_hi = 1.1;
    double nondeg_min = 0.5;
    double density_lo = 0.45, density_hi = 0.55;
    double blowup_alpha_tol = 0.05;
    double blowup_residual_max = 0.05;
    std::size_t min_points = 8;
};

struct FBReport {
    std::vector<Point> fb_points;
    std::vector<PointRecord> per_point;
    double C_max = 0.0;
    double c_min = 0.0;
    double density_gap = 0.0;
    std::vector<double> growth_radii;
    std::vector<double> density_radii;
    double max_slope_error = 0.0;
    double max_equation_residual = 0.0;
    std::size_t residual_nodes = 0;
    struct Checks {
        bool slope = false, growth = false, nondegeneracy = false, density = false, blowup = false, points = false;
        bool all() const { return slope && growth && nondegeneracy && density && blowup && points; }
    } checks;
    std::vector<std::string> notes;
};

/// Runs every scan on up to `max_points` free-boundary points of u and checks the
/// pass bands relative to the pointwise target slope.
inline FBReport analyze_free_boundary(const ScalarField& u, const ProblemData& data, const ReportOptions& opt = {}) {
    const Grid& g = u.grid();
    const double h = g.min_h();
    FBReport rep;
    rep.fb_points = extract_fb(u, opt.threshold);
    rep.growth_radii = dyadic_ladder(h, opt.growth_k_max, opt.growth_k_min);
    rep.density_radii = dyadic_ladder(h, opt.density_k_max, opt.density_k_min);
    rep.notes.push_back("constants are certified on a finite dyadic radius ladder per point only");
    const double trace_room = 2.0 * static_cast<double>(opt.n_samples) * h + 2.0 * h;
    const double room = std::max({rep.growth_radii.front(), opt.blowup_rho_h * h, trace_room});
    const auto chosen = select_fb_points(rep.fb_points, g, room, opt.max_points);
    rep.checks = {true, true, true, true, true, chosen.size() >= opt.min_points};
    rep.C_max = 0.0;
    rep.c_min = std::numeric_limits<double>::infinity();
    double max_frac = 0.0;
    for (const Point& x : chosen) {
        PointRecord rec;
        rec.x = x;
        rec.target_lambda_star = lambda_star_at(data, x);
        const double target = rec.target_lambda_star;
        try {
            const auto tr = fb_gradient_trace(u, x, opt.n_samples, opt.threshold);
            rec.measured_slope = tr.measured_slope;
            rec.normal = tr.normal;
            rec.fit_residual = tr.fit_residual;
        } catch (const PreconditionError& e) {
            rep.notes.push_back(std::string("gradient trace skipped: ") + e.what());
            rep.checks.slope = false;
        }
        const double err = std::abs(rec.measured_slope - target) / target;
        rep.max_slope_error = std::max(rep.max_slope_error, err);
        if (err > opt.slope_tol) rep.checks.slope = false;

        rec.growth = growth_scan(u, x, rep.growth_radii);
        rec.nondegeneracy = nondegeneracy_scan(u, x, rep.growth_radii);
        rec.density = density_scan(u, x, rep.density_radii, opt.threshold);
        for (const auto& row : rec.growth.rows) {
            if (row.sup_over_r < opt.growth_lo * target || row.sup_over_r > opt.growth_hi * target)
                rep.checks.growth = false;
        }
        if (rec.nondegeneracy.constant < opt.nondeg_min * target) rep.checks.nondegeneracy = false;
        for (const auto& row : rec.density.rows) {
            if (row.fraction < opt.density_lo || row.fraction > opt.density_hi) rep.checks.density = false;
            max_frac = std::max(max_frac, row.fraction);
        }
        rep.C_max = std::max(rep.C_max, rec.growth.constant);
        rep.c_min = std::min(rep.c_min, rec.nondegeneracy.constant);
        if (opt.blowup_rho_h > 0.0) {
            rec.blowup = blowup_fit(u, x, opt.blowup_rho_h * h, opt.threshold);
            if (std::abs(rec.blowup->alpha - target) > opt.blowup_alpha_tol * target ||
                rec.blowup->residual >= opt.blowup_residual_max)
                rep.checks.blowup = false;
        }
        rep.per_point.push_back(std::move(rec));
    }
    if (chosen.empty()) rep.c_min = 0.0;
    rep.density_gap = 1.0 - max_frac;
    return rep;
}

inline nlohmann::json to_json(const ScanResult& s, const char* value_key) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"r", r.r},
                        {"nodes", r.nodes},
                        {"sup_over_r", r.sup_over_r},
                        {"ball_mean_over_r", r.ball_mean_over_r},
                        {"sphere_mean_over_r", r.sphere_mean_over_r},
                        {"fraction", r.fraction}});
    }
    return {{value_key, s.constant}, {"trimmed", s.trimmed}, {"rows", rows}};
}

inline nlohmann::json to_json(const FBReport& rep) {
    using nlohmann::json;
    json pts = json::array();
    for (const auto& p : rep.fb_points) pts.push_back({p[0], p[1]});
    json per = json::array();
    for (const auto& r : rep.per_point) {
        json rec = {{"x", {r.x[0], r.x[1]}},
                    {"measured_slope", r.measured_slope},
                    {"target_lambda_star", r.target_lambda_star},
                    {"normal", {r.normal[0], r.normal[1]}},
                    {"fit_residual", r.fit_residual},
                    {"growth", to_json(r.growth, "C_max")},
                    {"nondegeneracy", to_json(r.nondegeneracy, "c_min")},
                    {"density", to_json(r.density, "c_tilde")}};
        if (r.blowup) {
            rec["blowup"] = {{"rho", r.blowup->rho},
                             {"alpha", r.blowup->alpha},
                             {"normal", {r.blowup->normal[0], r.blowup->normal[1]}},
                             {"residual", r.blowup->residual}};
        }
        per.push_back(rec);
    }
    return {{"fb_points", pts},
            {"per_point", per},
            {"growth_constants",
             {{"C_max", {{"value", rep.C_max}, {"radii", rep.growth_radii}}},
              {"c_min", {{"value", rep.c_min}, {"radii", rep.growth_radii}}},
              {"density_gap", {{"value", rep.density_gap}, {"radii", rep.density_radii}}}}},
            {"max_slope_error", rep.max_slope_error},
            {"equation_residual", {{"max", rep.max_equation_residual}, {"nodes", rep.residual_nodes}}},
            {"checks",
             {{"slope", rep.checks.slope},
              {"growth", rep.checks.growth},
              {"nondegeneracy", rep.checks.nondegeneracy},
              {"density", rep.checks.density},
              {"blowup", rep.checks.blowup},
              {"enough_points", rep.checks.points},
              {"all", rep.checks.all()}}},
            {"notes", rep.notes}};
}

/// One CSV per scan kind: point index, radius and the scan columns.
inline std::string scan_csv(const FBReport& rep, const std::string& kind) {
    std::ostringstream os;
    os.precision(17);
    os << "point,x,y,r,nodes,sup_over_r,ball_mean_over_r,sphere_mean_over_r,fraction\n";
    for (std::size_t k = 0; k < rep.per_point.size(); ++k) {
        const auto& p = rep.per_point[k];
        const ScanResult& s = kind == "growth" ? p.growth : kind == "density" ? p.density : p.nondegeneracy;
        for (const auto& r : s.rows) {
            os << k << ',' << p.x[0] << ',' << p.x[1] << ',' << r.r << ',' << r.nodes << ',' << r.sup_over_r << ','
               << r.ball_mean_over_r << ',' << r.sphere_mean_over_r << ',' << r.fraction << '\n';
        }
    }
    return os.str();
}

} // namespace fbflow
