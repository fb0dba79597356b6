#pragma once

/// @brief The sharp functional J, its regularization J_eps, the reaction family
/// beta_eps / B_eps, the flux a|xi|^{p-2}xi and the analytic gradient of J_eps.
///
/// Discretization: fields are nodal, energies are cell sums. Coefficients p, a, f
/// and lambda are taken at cell centers by corner averaging, and so is u inside
/// the reaction, positivity and forcing terms. The gradient term averages the two
/// triangulations of each cell (four right triangles, weight vol/4 each), which is
/// exact on affine fields and reduces to the 5-point Laplacian when p = 2.

#include "fbflow/grid.hpp"
#include "fbflow/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fbflow {

// ---------------------------------------------------------------------------
// Reaction profile

/// Reaction profile beta supported in (0,1) with total mass M.
class BetaProfile {
public:
    enum class Shape { polynomial, smoothstep, custom };

    /// 6 M s (1 - s) on (0,1).
    static BetaProfile polynomial(double mass = 1.0) { return BetaProfile(Shape::polynomial, mass, {}, "polynomial"); }

    /// 30 M s^2 (1 - s)^2 on (0,1); its primitive is the quintic smoothstep.
    static BetaProfile smoothstep(double mass = 1.0) { return BetaProfile(Shape::smoothstep, mass, {}, "smoothstep"); }

    /// Any shape positive on (0,1), rescaled to mass M. The primitive is tabulated
    /// by adaptive quadrature and interpolated with cubic Hermite pieces.
    static BetaProfile custom(std::function<double(double)> shape, double mass, std::string name = "custom") {
        return BetaProfile(Shape::custom, mass, std::move(shape), std::move(name));
    }

    static BetaProfile by_name(const std::string& name, double mass) {
        if (name == "polynomial") return polynomial(mass);
        if (name == "smoothstep") return smoothstep(mass);
        throw ContractError("unknown beta profile '" + name + "' (expected polynomial or smoothstep)");
    }

    double operator()(double s) const {
        if (!(s > 0.0 && s < 1.0)) return 0.0;
        switch (shape_) {
        case Shape::polynomial: return 6.0 * mass_ * s * (1.0 - s);
        case Shape::smoothstep: return 30.0 * mass_ * s * s * (1.0 - s) * (1.0 - s);
        case Shape::custom: return scale_ * custom_->fn(s);
        }
        return 0.0;
    }

    /// Integral of beta over (0, s).
    double primitive(double s) const {
        if (s <= 0.0) return 0.0;
        if (s >= 1.0) return mass_;
        switch (shape_) {
        case Shape::polynomial: return mass_ * s * s * (3.0 - 2.0 * s);
        case Shape::smoothstep: return mass_ * s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        case Shape::custom: return custom_->primitive(s, *this);
        }
        return 0.0;
    }

    double mass() const { return mass_; }
    double lipschitz() const { return lipschitz_; }
    const std::string& name() const { return name_; }
    Shape shape() const { return shape_; }

private:
    struct CustomTable {
        std::function<double(double)> fn;
        std::vector<double> cumulative;  // primitive at k / (size - 1), before scaling

        double primitive(double s, const BetaProfile& self) const {
            const double m = static_cast<double>(cumulative.size() - 1);
            const double x = s * m;
            const auto k = static_cast<std::size_t>(std::min(x, m - 1.0));
            const double t = x - static_cast<double>(k);
            const double dx = 1.0 / m;
            const double s0 = static_cast<double>(k) * dx, s1 = static_cast<double>(k + 1) * dx;
            const double y0 = cumulative[k], y1 = cumulative[k + 1];
            const double d0 = s0 > 0.0 ? fn(s0) : 0.0, d1 = s1 < 1.0 ? fn(s1) : 0.0;
            const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
            const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
            return self.scale_ * (h00 * y0 + h10 * dx * d0 + h01 * y1 + h11 * dx * d1);
        }
    };

    BetaProfile(Shape shape, double mass, std::function<double(double)> fn, std::string name)
        : shape_(shape), mass_(mass), name_(std::move(name)) {
        if (!(mass > 0.0) || !std::isfinite(mass)) throw ContractError("beta profile mass M must be positive");
        using boost::math::quadrature::gauss_kronrod;
        if (shape == Shape::custom) {
            if (!fn) throw ContractError("custom beta profile needs a shape function");
            auto table = std::make_shared<CustomTable>();
            table->fn = std::move(fn);
            const std::size_t panels = 4096;
            table->cumulative.assign(panels + 1, 0.0);
            for (std::size_t k = 0; k < panels; ++k) {
                const double lo = static_cast<double>(k) / panels, hi = static_cast<double>(k + 1) / panels;
                table->cumulative[k + 1] =
                    table->cumulative[k] + gauss_kronrod<double, 31>::integrate(table->fn, lo, hi, 5, 1e-14);
            }
            const double raw = table->cumulative.back();
            if (!(raw > 0.0)) throw ContractError("custom beta profile must be positive on (0,1)");
            scale_ = mass / raw;
            custom_ = std::move(table);
        }
        // Lipschitz constant and positivity by dense sampling.
        const std::size_t samples = 20000;
        double prev = (*this)(0.0);
        for (std::size_t k = 1; k <= samples; ++k) {
            const double s = static_cast<double>(k) / samples;
            const double v = (*this)(s);
            lipschitz_ = std::max(lipschitz_, std::abs(v - prev) * samples);
            if (k < samples && !(v > 0.0)) throw ContractError("beta must be positive on (0,1)");
            prev = v;
        }
        // Mass check by composite high-order quadrature.
        double integral = 0.0;
        for (std::size_t k = 0; k < 256; ++k) {
            integral += gauss_kronrod<double, 31>::integrate([this](double s) { return (*this)(s); },
                                                             k / 256.0, (k + 1) / 256.0, 0);
        }
        if (std::abs(integral - mass_) > 1e-10 * std::max(1.0, mass_))
            throw ContractError("beta profile mass check failed");
    }

    Shape shape_;
    double mass_;
    double scale_ = 1.0;
    double lipschitz_ = 0.0;
    std::string name_;
    std::shared_ptr<const CustomTable> custom_;
};

/// beta_eps(s) = beta(s / eps) / eps.
inline double beta_eps(double s, double eps, const BetaProfile& beta) {
    if (!(eps > 0.0)) throw ContractError("beta_eps: eps must be positive");
    return beta(s / eps) / eps;
}

/// B_eps(s) = integral of beta_eps over (0, s) = B(s / eps).
inline double B_eps(double s, double eps, const BetaProfile& beta) {
    if (!(eps > 0.0)) throw ContractError("B_eps: eps must be positive");
    return beta.primitive(s / eps);
}

/// Level sigma (as a fraction of eps) at which the one-dimensional eps-profile
/// crosses the free boundary of its sharp limit.
///
/// For constant p and f = 0 the profile satisfies u' = lambda* (B_eps(u)/M)^{1/p},
/// and its outer linear part extrapolates to zero exactly where
/// integral_{sigma}^{1} (B(t)/M)^{-1/p} dt = 1.
inline double sharp_fb_level(double p, const BetaProfile& beta) {
    if (!(p > 1.0)) throw ContractError("sharp_fb_level: p must exceed 1");
    const double M = beta.mass();
    // t = exp(-y) removes the endpoint singularity at t = 0. The integrand is
    // nonnegative, so accumulate panels in y until the integral passes 1 and solve
    // inside the last panel.
    auto integrand = [&](double y) {
        const double t = std::exp(-y);
        const double b = beta.primitive(t) / M;
        return b > 0.0 ? std::pow(b, -1.0 / p) * t : 0.0;
    };
    auto panel = [&](double y0, double y1) {
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, y0, y1, 15, 1e-12);
    };
    constexpr double kStep = 0.5;
    double y0 = 0.0, acc = 0.0;
    for (;;) {
        const double inc = panel(y0, y0 + kStep);
        if (acc + inc >= 1.0) break;
        acc += inc;
        y0 += kStep;
        if (y0 > 460.0) throw NumericError("sharp_fb_level: no bracket");
    }
    auto excess = [&](double y) { return acc + panel(y0, y) - 1.0; };
    boost::uintmax_t iters = 200;
    const auto [ya, yb] = boost::math::tools::toms748_solve(
        excess, y0, y0 + kStep, [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(1.0, x); },
        iters);
    return std::exp(-0.5 * (ya + yb));
}

/// Straightened profile value (as a fraction of eps) for a node at height t * eps.
///
/// Below eps the 1D eps-profile lies at distance eps/lambda* integral_t^1 (B/M)^{-1/p}
/// from its eps-level; continuing the outer linear part over that distance gives
/// 1 - integral_t^1 (B/M)^{-1/p}, clamped at 0. Heights at or above eps map to themselves.
inline double straightened_level(double t, double p, const BetaProfile& beta) {
    if (!(p > 1.0)) throw ContractError("straightened_level: p must exceed 1");
    if (t >= 1.0) return t;
    if (t <= 0.0) return 0.0;
    const double M = beta.mass();
    auto integrand = [&](double y) {
        const double s = std::exp(-y);
        const double b = beta.primitive(s) / M;
        return b > 0.0 ? std::pow(b, -1.0 / p) * s : 0.0;
    };
    const double I =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, -std::log(t), 15, 1e-12);
    return std::max(0.0, 1.0 - I);
}

// ---------------------------------------------------------------------------
// Problem data

struct EnergyBreakdown {
    double gradient_term = 0.0;
    double interface_term = 0.0;
    double forcing_term = 0.0;
    double total = 0.0;
};

/// Coefficients of one minimization problem: exponent, forcing, weight, and either
/// a sharp interface coefficient lambda or a reaction profile with eps.
class ProblemData {
public:
    /// Sharp problem: J(v) = sum a|grad v|^p/p + lambda [v > 0] + f v.
    static ProblemData sharp(ExponentField p, ScalarField lambda, ScalarField f, std::optional<ScalarField> a = {}) {
        ProblemData d(std::move(p), std::move(f), std::move(a));
        require_same_grid(d.p_.grid(), lambda.grid(), "ProblemData");
        if (!lambda.all_finite()) throw ContractError("lambda has non-finite values");
        d.lambda1_ = lambda.min();
        d.lambda2_ = lambda.max();
        if (!(d.lambda1_ > 0.0)) throw ContractError("assumption violated: lambda_1 = min lambda must be positive");
        d.lambda_ = std::move(lambda);
        d.lam_c_ = d.lambda_->cell_averages();
        return d;
    }

    /// Regularized problem: J_eps(v) = sum a|grad v|^p/p + B_eps(v) + f v.
    /// The sharp energy of its iterates uses lambda = M.
    static ProblemData regularized(ExponentField p, BetaProfile beta, std::optional<double> eps, ScalarField f,
                                   std::optional<ScalarField> a = {}) {
        ProblemData d(std::move(p), std::move(f), std::move(a));
        d.lambda1_ = d.lambda2_ = beta.mass();
        d.lam_c_.assign(d.grid().cell_count(), beta.mass());
        d.beta_ = std::move(beta);
        if (eps) d.set_eps(*eps);
        return d;
    }

    ProblemData with_eps(double eps) const {
        ProblemData d = *this;
        d.set_eps(eps);
        return d;
    }

    const Grid& grid() const { return p_.grid(); }
    const ExponentField& p() const { return p_; }
    const ScalarField& f() const { return f_; }
    const ScalarField& a() const { return a_; }
    const std::optional<ScalarField>& lambda() const { return lambda_; }
    const std::optional<BetaProfile>& beta() const { return beta_; }
    const std::optional<double>& eps() const { return eps_; }
    bool is_regularized() const { return beta_.has_value(); }

    double lambda1() const { return lambda1_; }
    double lambda2() const { return lambda2_; }
    double a0() const { return a0_; }
    double a1() const { return a1_; }

    /// Interface coefficient at x: lambda(x), or M for the regularized problem.
    double lambda_at(const Point& x) const { return lambda_ ? lambda_->interpolate(x) : beta_->mass(); }
    double p_at(const Point& x) const { return p_.field().interpolate(x); }

    const std::vector<double>& p_cells() const { return p_c_; }
    const std::vector<double>& a_cells() const { return a_c_; }
    const std::vector<double>& f_cells() const { return f_c_; }
    const std::vector<double>& lambda_cells() const { return lam_c_; }

    double eps_or_throw() const {
        if (!eps_) throw ContractError("regularized energy needs eps");
        return *eps_;
    }

private:
    ProblemData(ExponentField p, ScalarField f, std::optional<ScalarField> a)
        : p_(std::move(p)), f_(std::move(f)), a_(a ? std::move(*a) : ScalarField(p_.grid(), 1.0)) {
        require_same_grid(p_.grid(), f_.grid(), "ProblemData");
        require_same_grid(p_.grid(), a_.grid(), "ProblemData");
        if (!f_.all_finite()) throw ContractError("f has non-finite values");
        if (!a_.all_finite()) throw ContractError("weight a has non-finite values");
        a0_ = a_.min();
        a1_ = a_.max();
        if (!(a0_ > 0.0)) throw ContractError("assumption violated: weight a must satisfy a >= a_0 > 0");
        p_c_ = p_.field().cell_averages();
        a_c_ = a_.cell_averages();
        f_c_ = f_.cell_averages();
    }

    void set_eps(double eps) {
        if (!(eps > 0.0)) throw ContractError("eps must be positive");
        eps_ = eps;
    }

    ExponentField p_;
    ScalarField f_;
    ScalarField a_;
    std::optional<ScalarField> lambda_;
    std::optional<BetaProfile> beta_;
    std::optional<double> eps_;
    double lambda1_ = 0.0, lambda2_ = 0.0, a0_ = 1.0, a1_ = 1.0;
    std::vector<double> p_c_, a_c_, f_c_, lam_c_;
};

// ---------------------------------------------------------------------------
// Flux and monotonicity

/// a(x) (|xi|^2 + delta^2)^{(p-2)/2} xi at cell `cell`. delta = 0 is the exact flux.
inline Point flux(const ProblemData& data, const Index& cell, const Point& xi, double delta = 0.0) {
    if (!(delta >= 0.0)) throw ContractError("flux: delta must be nonnegative");
    const std::size_t c = data.grid().cell_id(cell);
    const double p = data.p_cells()[c], a = data.a_cells()[c];
    const double s = dot(xi, xi);
    if (p == 2.0) return a * xi;
    if (s == 0.0 && delta == 0.0) return {0.0, 0.0};
    return (a * std::pow(s + delta * delta, 0.5 * (p - 2.0))) * xi;
}

struct MonotonicityCheck {
    double lhs;
    double rhs;
    /// Empirical constant lhs / rhs (1 when both vanish).
    double ratio() const { return rhs > 0.0 ? lhs / rhs : (lhs == 0.0 ? 1.0 : std::numeric_limits<double>::infinity()); }
};

/// Both sides of the monotonicity inequalities for A(xi) = |xi|^{p-2} xi.
inline MonotonicityCheck check_monotonicity(const Point& xi, const Point& eta, double p) {
    auto A = [p](const Point& v) -> Point {
        const double n = norm(v);
        return n == 0.0 ? Point{0.0, 0.0} : std::pow(n, p - 2.0) * v;
    };
    const Point d = eta - xi;
    const double rhs = dot(A(eta) - A(xi), d);
    const double nd = norm(d);
    double lhs = 0.0;
    if (p >= 2.0) {
        lhs = std::pow(nd, p);
    } else if (nd > 0.0) {
        lhs = nd * nd * std::pow(norm(eta) + norm(xi), p - 2.0);
    }
    return {lhs, rhs};
}

// ---------------------------------------------------------------------------
// Energy and gradient assembly

enum class InterfaceMode { none, sharp, regularized };

/// Reusable assembler for one problem. Holds per-cell scratch so repeated
/// evaluations inside a solver do not allocate.
class EnergyAssembler {
public:
    EnergyAssembler(const ProblemData& data, Workers workers = {}) : data_(&data), workers_(workers) {
        const Grid& g = data.grid();
        corners_ = g.dim() == 1 ? 2 : 4;
        cell_out_.assign(g.cell_count() * static_cast<std::size_t>(corners_), 0.0);
        cell_diag_.assign(cell_out_.size(), 0.0);
    }

    const ProblemData& data() const { return *data_; }

    /// Energy parts. `threshold` only matters for the sharp mode.
    EnergyBreakdown energy(const ScalarField& u, InterfaceMode mode, double threshold = 0.0) const {
        return run(u, mode, threshold, 0.0, nullptr);
    }

    /// Energy parts and nodal gradient (boundary entries zero). The flux uses
    /// (|xi|^2 + delta^2)^{(p-2)/2} for p < 2; the energy itself is exact.
    ///
    /// With `diag`, also returns the diagonal of the gradient-term Hessian with the
    /// flux weights frozen at u (boundary entries zero).
    EnergyBreakdown energy_and_gradient(const ScalarField& u, InterfaceMode mode, double delta,
                                        std::vector<double>& grad, std::vector<double>* diag = nullptr) {
        if (mode == InterfaceMode::sharp) throw ContractError("the sharp energy has no gradient");
        grad.assign(u.size(), 0.0);
        if (diag) diag->assign(u.size(), 0.0);
        return run(u, mode, 0.0, delta, &grad, diag);
    }

private:
    struct Partial {
        double grad = 0.0, iface = 0.0, force = 0.0;
    };

    EnergyBreakdown run(const ScalarField& u, InterfaceMode mode, double threshold, double delta,
                        std::vector<double>* grad, std::vector<double>* diag = nullptr) const {
        const ProblemData& d = *data_;
        const Grid& g = d.grid();
        require_same_grid(g, u.grid(), "energy");
        if (mode == InterfaceMode::regularized && !d.is_regularized())
            throw ContractError("regularized energy needs a beta profile");
        const double eps = mode == InterfaceMode::regularized ? d.eps_or_throw() : 1.0;
        const auto& p_c = d.p_cells();
        const auto& a_c = d.a_cells();
        const auto& f_c = d.f_cells();
        const auto& l_c = d.lambda_cells();
        const double vol = g.cell_volume();
        const double hx = g.h()[0], hy = g.h()[1];
        const std::size_t ncell = g.cell_count();
        const std::size_t nblocks = (ncell + detail::kBlock - 1) / detail::kBlock;
        std::vector<Partial> partial(nblocks);
        double* out = grad ? cell_out_.data() : nullptr;
        double* dout = diag ? cell_diag_.data() : nullptr;
        const BetaProfile* beta = d.beta() ? &*d.beta() : nullptr;

        // Weight of |xi|^2 -> (|xi|^2 + delta^2)^{(p-2)/2}; s is |xi|^2.
        auto weight = [delta](double s, double p) {
            if (p == 2.0) return 1.0;
            if (p < 2.0) {
                const double t = s + delta * delta;
                return t > 0.0 ? std::pow(t, 0.5 * (p - 2.0)) : 0.0;
            }
            return std::pow(s, 0.5 * (p - 2.0));
        };
        auto density = [](double s, double p) { return p == 2.0 ? 0.5 * s : std::pow(s, 0.5 * p) / p; };

        parallel_blocks(ncell, workers_, [&](std::size_t lo, std::size_t hi) {
            Partial acc;
            for (std::size_t c = lo; c < hi; ++c) {
                const Index ci = g.cell_index(c);
                const double p = p_c[c], a = a_c[c];
                double uc = 0.0;
                if (g.dim() == 1) {
                    const double u0 = u.at(ci.i), u1 = u.at(ci.i + 1);
                    uc = 0.5 * (u0 + u1);
                    const double gx = (u1 - u0) / hx;
                    const double s = gx * gx;
                    acc.grad += a * density(s, p) * vol;
                    if (out) {
                        const double F = a * weight(s, p) * gx;  // flux times vol / h = flux
                        double r = f_c[c];
                        if (mode == InterfaceMode::regularized) r += beta_eps(uc, eps, *beta);
                        r *= 0.5 * vol;
                        out[2 * c] = -F + r;
                        out[2 * c + 1] = F + r;
                        if (dout) dout[2 * c] = dout[2 * c + 1] = a * weight(s, p) / hx;
                    }
                } else {
                    const double va = u.at(ci.i, ci.j), vb = u.at(ci.i + 1, ci.j);
                    const double vc = u.at(ci.i, ci.j + 1), vd = u.at(ci.i + 1, ci.j + 1);
                    uc = 0.25 * (va + vb + vc + vd);
                    const double dx0 = (vb - va) / hx, dx1 = (vd - vc) / hx;
                    const double dy0 = (vc - va) / hy, dy1 = (vd - vb) / hy;
                    // Triangles at corners a, b, c, d.
                    const double s00 = dx0 * dx0 + dy0 * dy0, s10 = dx0 * dx0 + dy1 * dy1;
                    const double s01 = dx1 * dx1 + dy0 * dy0, s11 = dx1 * dx1 + dy1 * dy1;
                    acc.grad += a * 0.25 * vol *
                                (density(s00, p) + density(s10, p) + density(s01, p) + density(s11, p));
                    if (out) {
                        const double w00 = weight(s00, p), w10 = weight(s10, p);
                        const double w01 = weight(s01, p), w11 = weight(s11, p);
                        const double k = a * 0.25 * vol;
                        const double X0 = k * (w00 + w10) * dx0 / hx, X1 = k * (w01 + w11) * dx1 / hx;
                        const double Y0 = k * (w00 + w01) * dy0 / hy, Y1 = k * (w10 + w11) * dy1 / hy;
                        double r = f_c[c];
                        if (mode == InterfaceMode::regularized) r += beta_eps(uc, eps, *beta);
                        r *= 0.25 * vol;
                        out[4 * c] = -X0 - Y0 + r;
                        out[4 * c + 1] = X0 - Y1 + r;
                        out[4 * c + 2] = -X1 + Y0 + r;
                        out[4 * c + 3] = X1 + Y1 + r;
                        if (dout) {
                            const double ex0 = k * (w00 + w10) / (hx * hx), ex1 = k * (w01 + w11) / (hx * hx);
                            const double ey0 = k * (w00 + w01) / (hy * hy), ey1 = k * (w10 + w11) / (hy * hy);
                            dout[4 * c] = ex0 + ey0;
                            dout[4 * c + 1] = ex0 + ey1;
                            dout[4 * c + 2] = ex1 + ey0;
                            dout[4 * c + 3] = ex1 + ey1;
                        }
                    }
                }
                acc.force += f_c[c] * uc * vol;
                if (mode == InterfaceMode::sharp) {
                    if (uc > threshold) acc.iface += l_c[c] * vol;
                } else if (mode == InterfaceMode::regularized) {
                    acc.iface += B_eps(uc, eps, *beta) * vol;
                }
            }
            partial[lo / detail::kBlock] = acc;
        });

        EnergyBreakdown e;
        for (const auto& pt : partial) {
            e.gradient_term += pt.grad;
            e.interface_term += pt.iface;
            e.forcing_term += pt.force;
        }
        e.total = e.gradient_term + e.interface_term + e.forcing_term;

        if (grad) gather(cell_out_, *grad);
        if (diag) gather(cell_diag_, *diag);
        return e;
    }

    void gather(const std::vector<double>& cell_out, std::vector<double>& grad) const {
        const Grid& g = data_->grid();
        const std::size_t n1 = g.n()[1];
        parallel_blocks(g.node_count(), workers_, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t id = lo; id < hi; ++id) {
                const Index k = g.node_index(id);
                if (g.is_boundary(k.i, k.j)) {
                    grad[id] = 0.0;
                    continue;
                }
                double s = 0.0;
                if (g.dim() == 1) {
                    s = cell_out[2 * (k.i - 1) + 1] + cell_out[2 * k.i];
                } else {
                    const std::size_t m1 = n1 - 1;
                    // Node is corner d of cell (i-1,j-1), c of (i,j-1), b of (i-1,j), a of (i,j).
                    s = cell_out[4 * ((k.i - 1) * m1 + (k.j - 1)) + 3] + cell_out[4 * (k.i * m1 + (k.j - 1)) + 2] +
                        cell_out[4 * ((k.i - 1) * m1 + k.j) + 1] + cell_out[4 * (k.i * m1 + k.j)];
                }
                grad[id] = s;
            }
        });
    }

    const ProblemData* data_;
    Workers workers_;
    int corners_ = 4;
    mutable std::vector<double> cell_out_;
    mutable std::vector<double> cell_diag_;
};

/// Sharp energy with the discrete positivity set {cell average of u > threshold}.
inline EnergyBreakdown energy_J(const ScalarField& u, const ProblemData& data, double threshold = 0.0,
                                Workers workers = {}) {
    if (!(threshold >= 0.0)) throw ContractError("energy_J: threshold must be nonnegative");
    return EnergyAssembler(data, workers).energy(u, InterfaceMode::sharp, threshold);
}

/// Regularized energy J_eps.
inline EnergyBreakdown energy_Jeps(const ScalarField& u, const ProblemData& data, Workers workers = {}) {
    data.eps_or_throw();
    return EnergyAssembler(data, workers).energy(u, InterfaceMode::regularized);
}

/// Nodal gradient of the discrete J_eps; boundary nodes carry zero.
inline ScalarField grad_energy_Jeps(const ScalarField& u, const ProblemData& data, double delta = 1e-8,
                                    Workers workers = {}) {
    EnergyAssembler asmb(data, workers);
    std::vector<double> g;
    asmb.energy_and_gradient(u, InterfaceMode::regularized, delta, g);
    return ScalarField(u.grid(), std::move(g));
}

} // namespace fbflow
