#pragma once

/// @brief Minimization engines: Dirichlet p(x)-Laplacian solve, J_eps descent,
/// eps-continuation toward sharp minimizers, and the comparison / Harnack /
/// Euler-Lagrange residual diagnostics.
///
/// Boundary nodes are Dirichlet-fixed throughout. Residuals are reported in strong
/// form: nodal gradient divided by the nodal control volume (the cell volume on a
/// uniform grid), so tolerances do not scale with h.

#include "fbflow/energy.hpp"
#include "fbflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fbflow {

struct StepRule {
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
};

struct SolveConfig {
    /// Stop (unconverged) when the relative energy decrease stays below this, with no
    /// new best residual, for `stall_window` consecutive accepted steps.
    double tol_energy = 1e-15;
    /// Strong-form residual bound that defines convergence.
    double tol_grad = 1e-6;
    long max_iters = 200000;
    /// Flux regularization for p < 2 inside the gradient.
    double delta = 1e-8;
    StepRule step_rule;
    int stall_window = 2000;
    /// Scale the descent direction by the frozen-weight Hessian diagonal.
    bool precondition = true;
    /// Exploratory projection onto u >= 0; off by default and reported when used.
    bool clamp_nonneg = false;
    std::string trace_path;
    Workers workers;

    void validate() const {
        if (!(tol_energy > 0.0) || !(tol_grad > 0.0)) throw ContractError("solver tolerances must be positive");
        if (max_iters < 1) throw ContractError("solver max_iters must be at least 1");
        if (!(delta >= 0.0)) throw ContractError("solver delta must be nonnegative");
        if (!(step_rule.backtrack > 0.0 && step_rule.backtrack < 1.0) || !(step_rule.armijo_c > 0.0 && step_rule.armijo_c < 1.0))
            throw ContractError("invalid step rule");
    }
};

struct SolveResult {
    ScalarField u;
    EnergyBreakdown energy;
    long iterations = 0;
    double final_grad_norm = 0.0;
    bool converged = false;
    bool clamped = false;
    std::string stop_reason;
};

namespace detail {

/// Relative resolution of the discrete energy used by the line search.
inline constexpr double kRoundoffFloor = 1e-12;

/// Sup-norm of the strong-form residual over free nodes.
inline double residual_norm(const std::vector<double>& grad, const ScalarField& u, bool clamp) {
    const Grid& g = u.grid();
    const double vol = g.cell_volume();
    double r = 0.0;
    for (std::size_t id = 0; id < grad.size(); ++id) {
        double gi = grad[id];
        if (clamp && u[id] <= 0.0 && gi > 0.0) gi = 0.0;
        r = std::max(r, std::abs(gi));
    }
    return r / vol;
}

class Trace {
public:
    explicit Trace(const std::string& path) {
        if (path.empty()) return;
        os_.open(path);
        if (!os_) throw ContractError("cannot open trace file '" + path + "'");
        os_ << "iter,gradient_term,interface_term,forcing_term,total,grad_norm,step\n";
        os_.precision(17);
    }
    void row(long it, const EnergyBreakdown& e, double r, double step) {
        if (!os_.is_open()) return;
        os_ << it << ',' << e.gradient_term << ',' << e.interface_term << ',' << e.forcing_term << ',' << e.total << ','
            << r << ',' << step << '\n';
    }

private:
    std::ofstream os_;
};

/// Barzilai-Borwein gradient descent with a monotone Armijo safeguard.
/// Nodes flagged in `fixed` (if given) are held at their initial values.
inline SolveResult descend(const ProblemData& data, InterfaceMode mode, ScalarField u, const SolveConfig& cfg,
                           const std::vector<char>* fixed = nullptr) {
    cfg.validate();
    const Grid& g = data.grid();
    require_same_grid(g, u.grid(), "solver");
    if (!u.all_finite()) throw NumericError("solver: initial field is not finite");
    EnergyAssembler asmb(data, cfg.workers);
    Trace trace(cfg.trace_path);
    const bool clamp = cfg.clamp_nonneg;
    if (clamp) {
        for (std::size_t id = 0; id < u.size(); ++id)
            if (!g.is_boundary_id(id)) u[id] = std::max(0.0, u[id]);
    }

    std::vector<double> grad, grad_t, diag, diag_t;
    std::vector<double>* want_diag = cfg.precondition ? &diag : nullptr;
    auto hold = [&](std::vector<double>& gr) {
        if (!fixed) return;
        for (std::size_t id = 0; id < gr.size(); ++id)
            if ((*fixed)[id]) gr[id] = 0.0;
    };
    EnergyBreakdown e = asmb.energy_and_gradient(u, mode, cfg.delta, grad, want_diag);
    hold(grad);
    double r = residual_norm(grad, u, clamp);
    trace.row(0, e, r, 0.0);

    // Preconditioner: frozen-weight Hessian diagonal, floored relative to its mean.
    std::vector<double> precond(u.size(), 1.0);
    auto refresh_precond = [&](const std::vector<double>& dg) {
        if (!cfg.precondition) return;
        double mean = 0.0;
        std::size_t count = 0;
        for (std::size_t id = 0; id < dg.size(); ++id) {
            if (g.is_boundary_id(id) || (fixed && (*fixed)[id])) continue;
            mean += dg[id];
            ++count;
        }
        mean = count ? mean / static_cast<double>(count) : 0.0;
        const double floor = mean > 0.0 ? 1e-3 * mean : data.a0() * g.cell_volume() / (g.min_h() * g.min_h());
        for (std::size_t id = 0; id < dg.size(); ++id) precond[id] = std::max(dg[id], floor);
    };
    refresh_precond(diag);

    const double h = g.min_h();
    double alpha = cfg.precondition ? 1.0 : h * h / (4.0 * g.dim() * data.a1() * g.cell_volume());
    ScalarField trial = u;
    std::vector<double> dir(u.size(), 0.0);
    int stall = 0;
    double r_best = r;
    long it = 0;
    SolveResult res;
    res.clamped = clamp;

    for (; it < cfg.max_iters; ++it) {
        if (r <= cfg.tol_grad) {
            res.converged = true;
            res.stop_reason = "tol_grad";
            break;
        }
        for (std::size_t id = 0; id < u.size(); ++id) {
            double d = -grad[id] / precond[id];
            if (clamp && u[id] <= 0.0 && d < 0.0) d = 0.0;
            dir[id] = d;
        }
        bool accepted = false;
        EnergyBreakdown e_t;
        double step = alpha;
        for (int bt = 0; bt <= cfg.step_rule.max_backtracks; ++bt, step *= cfg.step_rule.backtrack) {
            double decrease_model = 0.0;
            for (std::size_t id = 0; id < u.size(); ++id) {
                double v = u[id] + step * dir[id];
                if (clamp && !g.is_boundary_id(id)) v = std::max(0.0, v);
                trial[id] = v;
                decrease_model += grad[id] * (v - u[id]);
            }
            e_t = asmb.energy_and_gradient(trial, mode, cfg.delta, grad_t, cfg.precondition ? &diag_t : nullptr);
            hold(grad_t);
            if (!std::isfinite(e_t.total)) continue;
            if (e_t.total <= e.total + cfg.step_rule.armijo_c * decrease_model) {
                accepted = true;
                break;
            }
            // Energy differences below the resolution of J: approximate Armijo test on
            // the directional derivative, which stays accurate there.
            const double floor = kRoundoffFloor * (std::abs(e.gradient_term) + std::abs(e.interface_term) +
                                                   std::abs(e.forcing_term));
            if (e_t.total <= e.total + floor) {
                double slope_t = 0.0;
                for (std::size_t id = 0; id < u.size(); ++id) slope_t += grad_t[id] * (trial[id] - u[id]);
                if (slope_t <= (1.0 - 2.0 * cfg.step_rule.armijo_c) * -decrease_model) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            if (!std::isfinite(e_t.total)) throw NumericError("solver: non-finite energy in line search");
            res.stop_reason = "line_search";
            break;
        }
        // BB step in the preconditioned metric, alternating the two BB formulas.
        std::swap(diag, diag_t);
        refresh_precond(diag);
        double sds = 0.0, sy = 0.0, ydy = 0.0;
        for (std::size_t id = 0; id < u.size(); ++id) {
            const double sv = trial[id] - u[id], y = grad_t[id] - grad[id];
            sds += sv * sv * precond[id];
            sy += sv * y;
            ydy += y * y / precond[id];
        }
        if (sy > 0.0) {
            alpha = (it % 2 == 0) ? sds / sy : sy / ydy;
        } else {
            alpha = step * 2.0;
        }
        const double rel = (e.total - e_t.total) / std::max(1.0, std::abs(e.total));
        std::swap(u.values(), trial.values());
        std::swap(grad, grad_t);
        e = e_t;
        r = residual_norm(grad, u, clamp);
        trace.row(it + 1, e, r, step);
        // Stagnation: no energy progress and no new best residual over the window.
        if (r < 0.9 * r_best || rel >= cfg.tol_energy) {
            stall = 0;
        } else {
            ++stall;
        }
        r_best = std::min(r_best, r);
        if (stall >= cfg.stall_window) {
            ++it;
            res.stop_reason = "stalled";
            break;
        }
    }
    if (res.stop_reason.empty()) {
        res.converged = r <= cfg.tol_grad;
        res.stop_reason = res.converged ? "tol_grad" : "max_iters";
    }
    if (!u.all_finite()) throw NumericError("solver: iterate became non-finite");
    res.u = std::move(u);
    res.energy = e;
    res.iterations = it;
    res.final_grad_norm = r;
    return res;
}

inline ScalarField with_boundary(const ScalarField& init, const ScalarField& boundary) {
    require_same_grid(init.grid(), boundary.grid(), "boundary");
    ScalarField u = init;
    const Grid& g = u.grid();
    for (std::size_t id = 0; id < u.size(); ++id)
        if (g.is_boundary_id(id)) u[id] = boundary[id];
    return u;
}

} // namespace detail

/// Minimizes sum a|grad v|^p/p + f v with v = boundary on boundary nodes.
/// `init` defaults to the boundary field itself (its interior values are the start).
inline SolveResult solve_dirichlet(const ProblemData& data, const ScalarField& boundary, const SolveConfig& cfg,
                                   std::optional<ScalarField> init = {}) {
    require_same_grid(data.grid(), boundary.grid(), "solve_dirichlet");
    ScalarField u = detail::with_boundary(init ? *init : boundary, boundary);
    return detail::descend(data, InterfaceMode::none, std::move(u), cfg);
}

/// Descent on the discrete J_eps from `init` (boundary nodes taken from `boundary`).
inline SolveResult minimize_Jeps(const ProblemData& data, const ScalarField& boundary, const ScalarField& init,
                                 const SolveConfig& cfg) {
    data.eps_or_throw();
    ScalarField u = detail::with_boundary(init, boundary);
    return detail::descend(data, InterfaceMode::regularized, std::move(u), cfg);
}

// ---------------------------------------------------------------------------
// eps-continuation

struct ContinuationSchedule {
    std::vector<double> eps_list;
    bool warm_start = true;

    /// eps0, eps0 * ratio, ... while above eps_final, then eps_final.
    static ContinuationSchedule geometric(double eps0, double eps_final, double ratio = 0.5) {
        if (!(eps_final > 0.0) || !(eps0 >= eps_final) || !(ratio > 0.0 && ratio < 1.0))
            throw ContractError("invalid geometric eps schedule");
        ContinuationSchedule s;
        for (double e = eps0; e > eps_final * (1.0 + 1e-12); e *= ratio) s.eps_list.push_back(e);
        s.eps_list.push_back(eps_final);
        return s;
    }

    /// eps0 = sup(boundary) / 2, eps_final = 4h, ratio 1/2.
    static ContinuationSchedule defaults(const ScalarField& boundary) {
        const double eps_final = 4.0 * boundary.grid().min_h();
        return geometric(std::max(0.5 * boundary.max(), eps_final), eps_final);
    }

    void validate() const {
        if (eps_list.empty()) throw ContractError("eps schedule is empty");
        for (std::size_t k = 0; k < eps_list.size(); ++k) {
            if (!(eps_list[k] > 0.0)) throw ContractError("eps schedule entries must be positive");
            if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ContractError("eps schedule must be strictly decreasing");
        }
    }
};

/// How the last eps-iterate is turned into an approximate sharp minimizer.
struct SharpenRule {
    enum class Cut { hard, shifted, straighten };
    enum class Level { eps, calibrated };
    /// hard: zero out nodes at or below the level. shifted: (u - level)^+.
    /// straighten: values below eps are replaced by the linear continuation of the
    /// outer profile (straightened_level); the level is unused.
    Cut cut = Cut::straighten;
    /// eps: level = eps. calibrated: level = sharp_fb_level(p(x)) * eps.
    Level level = Level::eps;
    /// Re-solve the smooth equation on the sharpened positivity set, holding the zero
    /// set and the Dirichlet data fixed.
    bool polish = true;
};

/// Per-node cut levels for a given eps.
inline std::vector<double> sharpen_levels(const ProblemData& data, double eps, const SharpenRule& rule) {
    const Grid& g = data.grid();
    std::vector<double> levels(g.node_count(), eps);
    if (rule.level == SharpenRule::Level::eps) return levels;
    if (!data.beta()) throw ContractError("calibrated cut levels need a beta profile");
    const ExponentField& p = data.p();
    if (p.is_constant()) {
        const double sigma = sharp_fb_level(p.p_min(), *data.beta());
        for (auto& l : levels) l = sigma * eps;
        return levels;
    }
    // Tabulate sigma(p) over [p_min, p_max] and interpolate.
    const int m = 64;
    std::vector<double> table(m + 1);
    const double lo = p.p_min(), hi = p.p_max();
    for (int k = 0; k <= m; ++k) table[k] = sharp_fb_level(lo + (hi - lo) * k / m, *data.beta());
    for (std::size_t id = 0; id < levels.size(); ++id) {
        const double x = (p[id] - lo) / (hi - lo) * m;
        const int k = std::clamp(static_cast<int>(x), 0, m - 1);
        const double t = x - k;
        levels[id] = ((1.0 - t) * table[k] + t * table[k + 1]) * eps;
    }
    return levels;
}

inline ScalarField sharpen(const ScalarField& u, const std::vector<double>& levels, SharpenRule::Cut cut) {
    if (cut == SharpenRule::Cut::straighten) throw ContractError("sharpen: straightening needs the problem data");
    ScalarField out = u;
    for (std::size_t id = 0; id < out.size(); ++id) {
        const double v = u[id], l = levels[id];
        if (cut == SharpenRule::Cut::hard) {
            out[id] = v <= l ? 0.0 : v;
        } else {
            out[id] = std::max(0.0, v - l);
        }
    }
    return out;
}

/// Maps every node below eps onto the straightened 1D profile; nodes at or above eps
/// (and so all Dirichlet data >= eps) are unchanged.
inline ScalarField straighten(const ScalarField& u, const ProblemData& data, double eps) {
    if (!data.beta()) throw ContractError("straighten: needs a beta profile");
    if (!(eps > 0.0)) throw ContractError("straighten: eps must be positive");
    const ExponentField& p = data.p();
    const BetaProfile& beta = *data.beta();
    // Below sigma(p) * eps the result is 0; skip the quadrature well below that.
    double sigma_lo = 1.0;
    const int samples = p.p_max() > p.p_min() ? 8 : 0;
    for (int k = 0; k <= samples; ++k)
        sigma_lo = std::min(sigma_lo, sharp_fb_level(p.p_min() + (p.p_max() - p.p_min()) * k / 8.0, beta));
    sigma_lo *= 0.5;
    ScalarField out = u;
    for (std::size_t id = 0; id < out.size(); ++id) {
        const double t = u[id] / eps;
        if (t >= 1.0) continue;
        out[id] = t <= sigma_lo ? 0.0 : eps * straightened_level(t, p[id], beta);
    }
    return out;
}

/// Minimizes sum a|grad v|^p/p + f v over fields equal to `u` on boundary nodes and on
/// interior nodes where u <= 0; starts from `u`.
inline SolveResult polish_support(const ScalarField& u, const ProblemData& data, const SolveConfig& cfg) {
    const Grid& g = u.grid();
    std::vector<char> fixed(u.size(), 0);
    for (std::size_t id = 0; id < u.size(); ++id) fixed[id] = g.is_boundary_id(id) || u[id] <= 0.0;
    SolveConfig c = cfg;
    c.trace_path.clear();
    return detail::descend(data, InterfaceMode::none, u, c, &fixed);
}

/// Applies the rule at the given eps.
inline ScalarField sharpen(const ScalarField& u, const ProblemData& data, double eps, const SharpenRule& rule) {
    if (rule.cut == SharpenRule::Cut::straighten) return straighten(u, data, eps);
    return sharpen(u, sharpen_levels(data, eps, rule), rule.cut);
}

/// Per-stage trace file: "trace.csv" becomes "trace.stage<k>.csv".
inline std::string stage_trace_path(const std::string& path, std::size_t k) {
    const std::string tag = ".stage" + std::to_string(k);
    const auto dot = path.rfind('.');
    const auto slash = path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + tag;
    return path.substr(0, dot) + tag + path.substr(dot);
}

struct ContinuationStage {
    double eps = 0.0;
    SolveResult solve;
    /// Stage iterate after sharpening at this stage's eps.
    ScalarField sharpened;
    /// Sharp energy J (lambda = M) of `sharpened`.
    EnergyBreakdown sharp_energy;
    /// Support polish outcome when the rule asks for it.
    std::optional<SolveResult> polish;
};

struct ContinuationResult {
    std::vector<ContinuationStage> stages;
    /// Sharpened last iterate: the approximate minimizer of J.
    ScalarField final_u;
    /// Node levels used for the final cut.
    std::vector<double> final_levels;
    std::optional<std::size_t> failed_stage;
    bool ok() const { return !failed_stage && !stages.empty(); }
    const ScalarField& raw_u() const { return stages.back().solve.u; }
};

/// Solves J_eps along the schedule, warm-starting each stage from the previous one.
/// Stops at the first non-converged stage and records its index.
inline ContinuationResult minimize_J_continuation(const ProblemData& data, const ScalarField& boundary,
                                                  const ContinuationSchedule& sched, const SolveConfig& cfg,
                                                  const SharpenRule& rule = {}, std::optional<ScalarField> init = {}) {
    sched.validate();
    if (!data.is_regularized()) throw ContractError("continuation needs a beta profile");
    ContinuationResult out;
    ScalarField start = init ? *init : boundary;
    for (std::size_t k = 0; k < sched.eps_list.size(); ++k) {
        const double eps = sched.eps_list[k];
        const ProblemData stage_data = data.with_eps(eps);
        ContinuationStage st;
        st.eps = eps;
        SolveConfig stage_cfg = cfg;
        if (!cfg.trace_path.empty() && sched.eps_list.size() > 1)
            stage_cfg.trace_path = stage_trace_path(cfg.trace_path, k);
        st.solve = minimize_Jeps(stage_data, boundary, sched.warm_start || k == 0 ? start : boundary, stage_cfg);
        const auto levels = rule.cut == SharpenRule::Cut::straighten ? std::vector<double>(data.grid().node_count(), eps)
                                                                     : sharpen_levels(stage_data, eps, rule);
        st.sharpened = sharpen(st.solve.u, stage_data, eps, rule);
        if (rule.polish) {
            st.polish = polish_support(st.sharpened, stage_data, cfg);
            st.sharpened = st.polish->u;
        }
        st.sharp_energy = energy_J(st.sharpened, data, 0.0, cfg.workers);
        start = st.solve.u;
        const bool converged = st.solve.converged;
        out.stages.push_back(std::move(st));
        if (!converged) {
            out.failed_stage = k;
            break;
        }
        if (k + 1 == sched.eps_list.size()) out.final_levels = levels;
    }
    out.final_u = out.stages.back().sharpened;
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct InconclusiveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Solves the Dirichlet problem for both boundary data (same f) and reports whether
/// the solutions are ordered up to tol.
inline bool check_comparison(const ProblemData& data, const ScalarField& boundary_lo, const ScalarField& boundary_hi,
                             const SolveConfig& cfg, double tol = 1e-8) {
    for (std::size_t id = 0; id < boundary_lo.size(); ++id) {
        if (data.grid().is_boundary_id(id) && boundary_lo[id] > boundary_hi[id])
            throw ContractError("check_comparison: boundary data are not ordered");
    }
    const SolveResult lo = solve_dirichlet(data, boundary_lo, cfg);
    const SolveResult hi = solve_dirichlet(data, boundary_hi, cfg);
    if (!lo.converged || !hi.converged) throw InconclusiveError("check_comparison: a Dirichlet solve did not converge");
    for (std::size_t id = 0; id < lo.u.size(); ++id)
        if (lo.u[id] > hi.u[id] + tol) return false;
    return true;
}

struct HarnackReport {
    double sup = 0.0;
    double inf = 0.0;
    /// sup / (inf + delta_r)
    double ratio = 0.0;
};

/// sup and inf over B_{3 delta_r / 4}(center) for a field positive on B_{delta_r}(center).
inline HarnackReport check_harnack(const ScalarField& u, const Point& center, double delta_r) {
    if (!(delta_r > 0.0)) throw ContractError("check_harnack: radius must be positive");
    if (ScanWindow::room(u.grid(), center) < delta_r - 1e-12) throw PreconditionError("check_harnack: ball exits the grid");
    for (const auto& s : ball_values(u, center, delta_r))
        if (!(s.value > 0.0)) throw PreconditionError("check_harnack: u is not positive on the ball");
    HarnackReport rep;
    rep.sup = -std::numeric_limits<double>::infinity();
    rep.inf = std::numeric_limits<double>::infinity();
    const auto inner = ball_values(u, center, 0.75 * delta_r);
    if (inner.empty()) throw PreconditionError("check_harnack: ball contains no nodes");
    for (const auto& s : inner) {
        rep.sup = std::max(rep.sup, s.value);
        rep.inf = std::min(rep.inf, s.value);
    }
    rep.ratio = rep.sup / (rep.inf + delta_r);
    return rep;
}

/// Nodal gradient of the smooth part sum a|grad u|^p/p + f u (boundary entries zero).
inline std::vector<double> smooth_gradient(const ScalarField& u, const ProblemData& data, double delta = 1e-8,
                                           Workers workers = {}) {
    EnergyAssembler asmb(data, workers);
    std::vector<double> g;
    asmb.energy_and_gradient(u, InterfaceMode::none, delta, g);
    return g;
}

struct EquationResidual {
    double max_residual = 0.0;
    std::size_t nodes_checked = 0;
};

/// Strong-form residual of Delta_p u = f on interior nodes whose incident cells have
/// all corners above `level` (the discrete interior of {u > level}).
inline EquationResidual equation_residual(const ScalarField& u, const ProblemData& data, double level,
                                          double delta = 1e-8) {
    const Grid& g = u.grid();
    const auto grad = smooth_gradient(u, data, delta);
    EquationResidual out;
    const double vol = g.cell_volume();
    const int jr = g.dim() == 2 ? 1 : 0;
    for (std::size_t id = 0; id < u.size(); ++id) {
        const Index k = g.node_index(id);
        if (g.is_boundary(k.i, k.j)) continue;
        // every corner of every incident cell lies above the level
        bool inside = true;
        for (int di = -1; di <= 1 && inside; ++di)
            for (int dj = -jr; dj <= jr && inside; ++dj)
                inside = u.at(k.i + di, k.j + dj) > level;
        if (!inside) continue;
        ++out.nodes_checked;
        out.max_residual = std::max(out.max_residual, std::abs(grad[id]) / vol);
    }
    return out;
}

struct SubsolutionCheck {
    /// max over hats of <grad smooth part, hat> / integral(hat); <= tol means Delta_p u >= f.
    double max_defect = -std::numeric_limits<double>::infinity();
    std::size_t hats = 0;
};

/// Tests the weak inequality Delta_p u >= f against random nonnegative hats. Each hat
/// is a random nonnegative combination of the nodal hat at a random interior node and
/// its axis neighbours. Half of the centers are drawn from nodes within `band` of the
/// free boundary (nodes whose neighbourhood meets both phases) when such nodes exist.
inline SubsolutionCheck subsolution_check(const ScalarField& u, const ProblemData& data, std::size_t count,
                                          std::uint64_t seed, int band = 4, double delta = 1e-8) {
    const Grid& g = u.grid();
    const auto grad = smooth_gradient(u, data, delta);
    std::vector<std::size_t> interior, near_fb;
    for (std::size_t id = 0; id < u.size(); ++id) {
        const Index k = g.node_index(id);
        if (g.is_boundary(k.i, k.j)) continue;
        interior.push_back(id);
        bool pos = false, zero = false;
        const long b = band;
        for (long di = -b; di <= b; ++di) {
            for (long dj = (g.dim() == 2 ? -b : 0); dj <= (g.dim() == 2 ? b : 0); ++dj) {
                const long i = static_cast<long>(k.i) + di, j = static_cast<long>(k.j) + dj;
                if (i < 0 || j < 0 || i >= static_cast<long>(g.n()[0]) || j >= static_cast<long>(g.n()[1])) continue;
                (u.at(i, j) > 0.0 ? pos : zero) = true;
            }
        }
        if (pos && zero) near_fb.push_back(id);
    }
    SubsolutionCheck out;
    if (interior.empty()) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.0, 1.0);
    const double vol = g.cell_volume();
    for (std::size_t h = 0; h < count; ++h) {
        const auto& pool = (h % 2 == 1 && !near_fb.empty()) ? near_fb : interior;
        const std::size_t center = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        const Index k = g.node_index(center);
        double num = 0.0, mass = 0.0;
        auto add = [&](long i, long j, double c) {
            if (i < 0 || j < 0 || i >= static_cast<long>(g.n()[0]) || j >= static_cast<long>(g.n()[1])) return;
            if (g.is_boundary(i, j)) return;
            num += c * grad[g.node_id(i, j)];
            mass += c * vol;
        };
        const long i = static_cast<long>(k.i), j = static_cast<long>(k.j);
        add(i, j, 0.5 + amp(rng));
        add(i - 1, j, amp(rng));
        add(i + 1, j, amp(rng));
        if (g.dim() == 2) {
            add(i, j - 1, amp(rng));
            add(i, j + 1, amp(rng));
        }
        out.max_defect = std::max(out.max_defect, num / mass);
        ++out.hats;
    }
    return out;
}

} // namespace fbflow
