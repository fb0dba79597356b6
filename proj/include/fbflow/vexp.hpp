#pragma once

/// @brief Variable-exponent Lebesgue space numerics: modular, Luxemburg norm,
/// dual exponent, and the inequality checks used by the property suites.
///
/// All integrals use the one-point cell quadrature of grid.hpp with field values
/// and exponents interpolated to cell centers by corner averaging.

#include "fbflow/grid.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace fbflow {

struct Modular {
    double value = 0.0;
};

namespace detail {

/// sum_c |v_c / s|^{q_c} * vol
inline double scaled_modular(std::span<const double> abs_vals, std::span<const double> exps, double vol, double s) {
    double total = 0.0;
    for (std::size_t c = 0; c < abs_vals.size(); ++c) {
        if (abs_vals[c] == 0.0) continue;
        total += std::pow(abs_vals[c] / s, exps[c]);
    }
    return total * vol;
}

/// Luxemburg norm of the piecewise-constant function with cell values and exponents.
inline double luxemburg_cells(std::span<const double> abs_vals, std::span<const double> exps, double measure,
                              double vol, double tol) {
    if (!(tol > 0.0)) throw ContractError("luxemburg_norm: tol must be positive");
    double sup = 0.0, q_min = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < abs_vals.size(); ++c) {
        sup = std::max(sup, abs_vals[c]);
        q_min = std::min(q_min, exps[c]);
    }
    if (sup == 0.0) return 0.0;
    auto rho = [&](double s) { return scaled_modular(abs_vals, exps, vol, s); };

    double lo = std::numeric_limits<double>::epsilon();
    double hi = std::max(1.0, sup * std::pow(measure, 1.0 / q_min) + 1.0);
    for (int k = 0; k < 200 && rho(hi) > 1.0; ++k) hi *= 2.0;
    for (int k = 0; k < 200 && rho(lo) <= 1.0; ++k) lo *= 0.5;
    if (rho(hi) > 1.0 || rho(lo) <= 1.0) throw NumericError("luxemburg_norm: could not bracket the norm");

    for (int it = 0; it < 400; ++it) {
        if (hi - lo <= tol * hi) return 0.5 * (lo + hi);
        const double mid = 0.5 * (lo + hi);
        (rho(mid) <= 1.0 ? hi : lo) = mid;
    }
    throw NumericError("luxemburg_norm: bisection did not converge");
}

struct CellPair {
    std::vector<double> abs_vals;
    std::vector<double> exps;
};

inline CellPair cell_pair(const ScalarField& u, const ExponentField& p) {
    require_same_grid(u.grid(), p.grid(), "vexp");
    CellPair out{u.cell_averages(), p.field().cell_averages()};
    for (double& v : out.abs_vals) v = std::abs(v);
    return out;
}

} // namespace detail

/// Discrete modular: integral of |u|^{p(x)} over the grid.
inline Modular modular(const ScalarField& u, const ExponentField& p) {
    const auto cp = detail::cell_pair(u, p);
    return {detail::scaled_modular(cp.abs_vals, cp.exps, u.grid().cell_volume(), 1.0)};
}

/// inf{s > 0 : modular(u/s) <= 1}, by bisection to relative width tol.
inline double luxemburg_norm(const ScalarField& u, const ExponentField& p, double tol = 1e-12) {
    const auto cp = detail::cell_pair(u, p);
    return detail::luxemburg_cells(cp.abs_vals, cp.exps, u.grid().measure(), u.grid().cell_volume(), tol);
}

/// Nodewise p' = p / (p - 1).
inline ExponentField dual_exponent(const ExponentField& p) {
    ScalarField q(p.grid());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = p[k] / (p[k] - 1.0);
    return ExponentField(std::move(q));
}

struct SandwichCheck {
    double lhs;
    double norm;
    double rhs;
    bool holds(double slack = 1e-8) const { return lhs <= norm + slack && norm <= rhs + slack; }
};

/// min/max of modular^{1/p_min}, modular^{1/p_max} around the Luxemburg norm.
inline SandwichCheck check_norm_modular_sandwich(const ScalarField& u, const ExponentField& p, double tol = 1e-12) {
    const double m = modular(u, p).value;
    const double a = std::pow(m, 1.0 / p.p_min());
    const double b = std::pow(m, 1.0 / p.p_max());
    return {std::min(a, b), luxemburg_norm(u, p, tol), std::max(a, b)};
}

struct HolderCheck {
    double lhs;
    double rhs;
    bool holds(double slack = 1e-8) const { return lhs <= rhs + slack; }
};

/// lhs = integral of |f||g|, rhs = 2 ||f||_{p(.)} ||g||_{p'(.)}.
///
/// The dual norm uses the exact conjugate of each cell-center exponent so the
/// discrete pair stays conjugate cell by cell.
inline HolderCheck check_holder(const ScalarField& f, const ScalarField& g, const ExponentField& p, double tol = 1e-12) {
    require_same_grid(f.grid(), g.grid(), "check_holder");
    const auto fp = detail::cell_pair(f, p);
    auto gp = detail::cell_pair(g, p);
    for (double& q : gp.exps) q = q / (q - 1.0);
    const Grid& grid = f.grid();
    double lhs = 0.0;
    for (std::size_t c = 0; c < fp.abs_vals.size(); ++c) lhs += fp.abs_vals[c] * gp.abs_vals[c];
    lhs *= grid.cell_volume();
    const double nf = detail::luxemburg_cells(fp.abs_vals, fp.exps, grid.measure(), grid.cell_volume(), tol);
    const double ng = detail::luxemburg_cells(gp.abs_vals, gp.exps, grid.measure(), grid.cell_volume(), tol);
    return {lhs, 2.0 * nf * ng};
}

struct PoincareCheck {
    double lhs;
    double rhs;
    double ratio;
};

/// lhs = ||u||_{p(.)}, rhs = || |grad u| ||_{p(.)} with the gradient taken per cell.
inline PoincareCheck check_poincare(const ScalarField& u, const ExponentField& p, double tol = 1e-12) {
    require_same_grid(u.grid(), p.grid(), "check_poincare");
    const Grid& grid = u.grid();
    const double scale = std::max(1.0, u.max_abs());
    for (std::size_t id = 0; id < u.size(); ++id) {
        if (grid.is_boundary_id(id) && std::abs(u[id]) > 1e-12 * scale)
            throw PreconditionError("check_poincare: u must vanish on boundary nodes");
    }
    const double lhs = luxemburg_norm(u, p, tol);
    std::vector<double> grad(grid.cell_count());
    for (std::size_t c = 0; c < grad.size(); ++c) grad[c] = norm(cell_gradient(u, grid.cell_index(c)));
    const auto exps = p.field().cell_averages();
    const double rhs = detail::luxemburg_cells(grad, exps, grid.measure(), grid.cell_volume(), tol);
    return {lhs, rhs, rhs > 0.0 ? lhs / rhs : 0.0};
}

} // namespace fbflow
