#pragma once

/// @brief Independent ground truth: planar solutions, the one-dimensional eps-profile
/// from its first integral, and a brute-force minimizer of the sharp functional on
/// small 1D grids.
///
/// Nothing here calls the descent solver. The 1D sub-problems of the brute force are
/// solved by a damped Newton iteration on their own tridiagonal systems.

#include "fbflow/energy.hpp"
#include "fbflow/grid.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fbflow {

// ---------------------------------------------------------------------------
// Planar solutions

struct PlanarSolution {
    double alpha = 0.0;
    Point normal{1.0, 0.0};
    double offset = 0.0;

    double operator()(const Point& x) const { return alpha * std::max(0.0, dot(x, normal) - offset); }
};

/// alpha = (p/(p-1) lambda)^{1/p}, normal normalized.
inline PlanarSolution planar_solution(double p0, double lam0, Point normal, double offset) {
    if (!(p0 > 1.0)) throw ContractError("planar_oracle: p must exceed 1");
    if (!(lam0 > 0.0)) throw ContractError("planar_oracle: lambda must be positive");
    const double n = norm(normal);
    if (!(n > 0.0)) throw ContractError("planar_oracle: normal must be nonzero");
    return {std::pow(p0 / (p0 - 1.0) * lam0, 1.0 / p0), (1.0 / n) * normal, offset};
}

inline ScalarField planar_oracle(double p0, double lam0, Point normal, double offset, const Grid& grid) {
    const PlanarSolution s = planar_solution(p0, lam0, normal, offset);
    return ScalarField::sample(grid, s);
}

/// Sharp energy of the planar solution per unit measure of positive phase:
/// alpha^p/p + lambda = lambda p/(p-1).
inline double planar_energy_density(double p0, double lam0) { return lam0 * p0 / (p0 - 1.0); }

// ---------------------------------------------------------------------------
// 1D eps-profile

/// E = (p-1)/p |u'|^p - B_eps(u), constant along 1D solutions of (|u'|^{p-2}u')' = beta_eps(u).
struct FirstIntegral1D {
    double p = 2.0;
    double eps = 1.0;
    BetaProfile beta = BetaProfile::polynomial();

    double value(double u, double du) const { return (p - 1.0) / p * std::pow(std::abs(du), p) - B_eps(u, eps, beta); }

    /// Per cell of a 1D field: cell-center slope and corner-average value.
    std::vector<double> cells(const ScalarField& u) const {
        const Grid& g = u.grid();
        if (g.dim() != 1) throw ContractError("first integral needs a 1D field");
        std::vector<double> out(g.cell_count());
        for (std::size_t c = 0; c < out.size(); ++c) {
            const double du = (u.at(c + 1) - u.at(c)) / g.h()[0];
            out[c] = value(0.5 * (u.at(c) + u.at(c + 1)), du);
        }
        return out;
    }
};

/// Increasing 1D solution of (|u'|^{p-2}u')' = beta_eps(u) with a free edge on the
/// left (u = u' = 0 there, possibly at -infinity) and u = right_value at the right end.
///
/// The first integral with zero constant gives u' = phi(u) = lambda* (B_eps(u)/M)^{1/p};
/// node positions are inverted from x(u) = b - integral_u^{right} ds / phi(s).
class OdeProfile1D {
public:
    OdeProfile1D(double p0, double eps, BetaProfile beta, const Grid& grid, double right_value)
        : p_(p0), eps_(eps), beta_(std::move(beta)), right_(right_value) {
        if (grid.dim() != 1) throw ContractError("ode_profile_1d: grid must be 1D");
        if (!(p0 > 1.0)) throw ContractError("ode_profile_1d: p must exceed 1");
        if (!(eps > 0.0)) throw ContractError("ode_profile_1d: eps must be positive");
        if (!(right_value > eps)) throw PreconditionError("ode_profile_1d: right value must exceed eps");
        slope_ = std::pow(p0 / (p0 - 1.0) * beta_.mass(), 1.0 / p0);
        right_x_ = grid.origin()[0] + grid.extent()[0];
        linear_len_ = (right_ - eps_) / slope_;
        tail_len_ = p0 > 2.0 ? tail(0.0) : std::numeric_limits<double>::infinity();
        u_ = ScalarField(grid);
        for (std::size_t i = 0; i < grid.n()[0]; ++i) u_.at(i) = height(right_x_ - grid.node(i)[0]);
    }

    const ScalarField& field() const { return u_; }
    double far_slope() const { return slope_; }

    /// u' as a function of the height u.
    double slope_at_height(double s) const {
        if (s <= 0.0) return 0.0;
        return slope_ * std::pow(beta_.primitive(std::min(s / eps_, 1.0)) / beta_.mass(), 1.0 / p_);
    }

    /// x-position of the free edge, or -infinity for p <= 2.
    double free_edge() const { return right_x_ - linear_len_ - tail_len_; }

    FirstIntegral1D first_integral() const { return {p_, eps_, beta_}; }

    /// Profile value at distance d to the left of the right end.
    double height(double d) const {
        if (d <= linear_len_) return right_ - slope_ * d;
        const double target = d - linear_len_;
        if (target >= tail_len_) return 0.0;
        build_table(target);
        if (target >= dist_.back()) return 0.0;
        // Panel k with dist_[k] <= target < dist_[k + 1]; Newton in y with bisection safeguard.
        const auto it = std::upper_bound(dist_.begin(), dist_.end(), target);
        const std::size_t k = static_cast<std::size_t>(it - dist_.begin()) - 1;
        double lo = k * kPanel, hi = lo + kPanel;
        double y = lo + (target - dist_[k]) / (dist_[k + 1] - dist_[k]) * kPanel;
        for (int iter = 0; iter < 100; ++iter) {
            const double F = dist_[k] + panel_integral(k * kPanel, y) - target;
            (F > 0.0 ? hi : lo) = y;
            double next = y - F / tail_integrand(y);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - y) <= 1e-15 * std::max(1.0, y)) {
                y = next;
                break;
            }
            y = next;
        }
        return eps_ * std::exp(-y);
    }

    /// integral_s^eps dt / phi(t), with t = eps exp(-y).
    double tail(double s) const {
        if (s >= eps_) return 0.0;
        const double y_max = s > 0.0 ? std::log(eps_ / s) : 60.0;
        auto f = [this](double y) { return tail_integrand(y); };
        double total = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, y_max, 20, 1e-14);
        if (s <= 0.0) {
            // For p > 2 the remainder beyond y = 60 is below double resolution.
            total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, y_max, 4.0 * y_max, 20, 1e-14);
        }
        return total;
    }

private:
    double p_, eps_;
    BetaProfile beta_;
    double right_;
    double slope_ = 0.0;
    double right_x_ = 0.0;
    double linear_len_ = 0.0;
    double tail_len_ = 0.0;
    ScalarField u_;

    /// Tail distance as a function of y = log(eps / s), tabulated on panels of width kPanel.
    static constexpr double kPanel = 0.05;
    static constexpr double kMaxY = 700.0;
    mutable std::vector<double> dist_{0.0};

    /// d(distance)/dy = s / phi(s).
    double tail_integrand(double y) const {
        const double t = std::exp(-y);
        const double b = beta_.primitive(t) / beta_.mass();
        return b > 0.0 ? eps_ * t / (slope_ * std::pow(b, 1.0 / p_)) : 0.0;
    }

    double panel_integral(double a, double b) const {
        auto f = [this](double y) { return tail_integrand(y); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0);
    }

    /// Extends the table until it covers `target` or y reaches kMaxY.
    void build_table(double target) const {
        while (dist_.back() <= target) {
            const double a = static_cast<double>(dist_.size() - 1) * kPanel;
            if (a >= kMaxY) return;
            dist_.push_back(dist_.back() + panel_integral(a, a + kPanel));
        }
    }
};

inline ScalarField ode_profile_1d(double p0, double eps, const BetaProfile& beta, const Grid& grid, double right_value) {
    return OdeProfile1D(p0, eps, beta, grid, right_value).field();
}

// ---------------------------------------------------------------------------
// Brute force over contiguous zero sets

struct BruteForceResult {
    ScalarField u_best;
    double J_best = std::numeric_limits<double>::infinity();
    /// First and last node of the zero block, absent when u > 0 at every interior node.
    std::optional<std::pair<std::size_t, std::size_t>> zero_block;
    std::size_t candidates = 0;
    std::string scope = "optimal over contiguous zero sets";
};

namespace detail {

/// Minimizes sum_c a_c |u'|^p/p h + f_c (u_i + u_{i+1})/2 h with u fixed where `fixed`.
/// Damped Newton with energy backtracking; the Hessian weight is floored for p < 2.
inline std::vector<double> newton_1d(const std::vector<double>& p_c, const std::vector<double>& a_c,
                                     const std::vector<double>& f_c, double h, std::vector<double> u,
                                     const std::vector<char>& fixed) {
    const std::size_t n = u.size();
    auto energy = [&](const std::vector<double>& v) {
        double e = 0.0;
        for (std::size_t c = 0; c + 1 < n; ++c) {
            const double d = (v[c + 1] - v[c]) / h;
            e += (a_c[c] * std::pow(std::abs(d), p_c[c]) / p_c[c] + f_c[c] * 0.5 * (v[c] + v[c + 1])) * h;
        }
        return e;
    };
    std::vector<double> grad(n), diag(n), off(n), step(n), trial(n);
    double e = energy(u);
    for (int it = 0; it < 200; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(diag.begin(), diag.end(), 0.0);
        std::fill(off.begin(), off.end(), 0.0);
        for (std::size_t c = 0; c + 1 < n; ++c) {
            const double d = (u[c + 1] - u[c]) / h;
            const double ad = std::abs(d), p = p_c[c];
            const double flux = ad > 0.0 ? a_c[c] * std::pow(ad, p - 1.0) * (d > 0 ? 1.0 : -1.0) : 0.0;
            const double curv = a_c[c] * (p - 1.0) * std::pow(std::max(ad, 1e-8), p - 2.0) / h;
            grad[c] += -flux + 0.5 * f_c[c] * h;
            grad[c + 1] += flux + 0.5 * f_c[c] * h;
            diag[c] += curv;
            diag[c + 1] += curv;
            off[c] = -curv;
        }
        double gmax = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!fixed[i]) gmax = std::max(gmax, std::abs(grad[i]));
        if (gmax / h <= 1e-12) break;
        // Thomas algorithm on the free nodes (fixed nodes decouple).
        std::vector<double> c_prime(n, 0.0), d_prime(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) {
                c_prime[i] = 0.0;
                d_prime[i] = 0.0;
                continue;
            }
            const double lower = (i > 0 && !fixed[i - 1]) ? off[i - 1] : 0.0;
            const double upper = (i + 1 < n && !fixed[i + 1]) ? off[i] : 0.0;
            const double prev_c = i > 0 ? c_prime[i - 1] : 0.0, prev_d = i > 0 ? d_prime[i - 1] : 0.0;
            const double denom = diag[i] - lower * prev_c;
            c_prime[i] = upper / denom;
            d_prime[i] = (-grad[i] - lower * prev_d) / denom;
        }
        for (std::size_t k = n; k-- > 0;) {
            if (fixed[k]) {
                step[k] = 0.0;
                continue;
            }
            step[k] = d_prime[k] - (k + 1 < n && !fixed[k + 1] ? c_prime[k] * step[k + 1] : 0.0);
        }
        double t = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] + t * step[i];
            const double et = energy(trial);
            if (et <= e) {
                moved = et < e || t == 1.0;
                u.swap(trial);
                e = et;
                break;
            }
        }
        if (!moved) break;
    }
    return u;
}

} // namespace detail

/// Exact discrete minimizer of the sharp functional J (threshold 0) on a 1D grid of at
/// most 64 nodes, over all fields whose zero set is one contiguous block of nodes.
/// Boundary nodes may join the block only where the boundary value is 0.
inline BruteForceResult brute_force_1d(const ProblemData& data, const ScalarField& boundary) {
    const Grid& g = data.grid();
    if (g.dim() != 1) throw ContractError("brute_force_1d: grid must be 1D");
    if (data.is_regularized()) throw ContractError("brute_force_1d: needs the sharp problem");
    const std::size_t n = g.n()[0];
    if (n > 64) throw ContractError("brute_force_1d: refusing n > 64 (combinatorial guard)");
    require_same_grid(g, boundary.grid(), "brute_force_1d");
    const double left = boundary.at(0), right = boundary.at(n - 1);
    if (left < 0.0 || right < 0.0) throw PreconditionError("brute_force_1d: boundary values must be nonnegative");

    const double h = g.h()[0];
    const auto& p_c = data.p_cells();
    const auto& a_c = data.a_cells();
    const auto& f_c = data.f_cells();
    const auto& l_c = data.lambda_cells();

    auto sharp_J = [&](const std::vector<double>& v) {
        double e = 0.0;
        for (std::size_t c = 0; c + 1 < n; ++c) {
            const double d = (v[c + 1] - v[c]) / h;
            const double uc = 0.5 * (v[c] + v[c + 1]);
            e += (a_c[c] * std::pow(std::abs(d), p_c[c]) / p_c[c] + f_c[c] * uc + (uc > 0.0 ? l_c[c] : 0.0)) * h;
        }
        return e;
    };

    BruteForceResult best;
    auto consider = [&](std::optional<std::pair<std::size_t, std::size_t>> block) {
        std::vector<double> u(n, 0.0);
        std::vector<char> fixed(n, 0);
        u[0] = left;
        u[n - 1] = right;
        fixed[0] = fixed[n - 1] = 1;
        if (block) {
            for (std::size_t i = block->first; i <= block->second; ++i) {
                u[i] = 0.0;
                fixed[i] = 1;
            }
        }
        // Linear start between fixed nodes.
        std::size_t prev = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (!fixed[i]) continue;
            for (std::size_t k = prev + 1; k < i; ++k)
                u[k] = u[prev] + (u[i] - u[prev]) * static_cast<double>(k - prev) / static_cast<double>(i - prev);
            prev = i;
        }
        u = detail::newton_1d(p_c, a_c, f_c, h, std::move(u), fixed);
        const double J = sharp_J(u);
        ++best.candidates;
        if (J < best.J_best) {
            best.J_best = J;
            best.u_best = ScalarField(g, u);
            best.zero_block = block;
        }
    };

    consider(std::nullopt);
    const std::size_t first = left == 0.0 ? 0 : 1;
    const std::size_t last = right == 0.0 ? n - 1 : n - 2;
    for (std::size_t k0 = first; k0 <= last && k0 < n; ++k0)
        for (std::size_t k1 = k0; k1 <= last; ++k1) consider(std::make_pair(k0, k1));
    return best;
}

} // namespace fbflow
