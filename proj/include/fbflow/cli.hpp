#pragma once

/// @brief Experiment pipelines behind the `fbflow` executable: solve, verify,
/// continuation study and oracle suites. Every command returns a stable exit code
/// and writes plain CSV / JSON / field files into the output directory.

#include "fbflow/config.hpp"
#include "fbflow/fbanalysis.hpp"
#include "fbflow/solver.hpp"
#include "fbflow/suites.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fbflow::cli {

/// Process exit codes. 0 to 3 are the stable contract; 4 separates a completed
/// verification with failing checks from a config error.
enum ExitCode : int {
    kPass = 0,
    kConfigError = 1,
    kNonConvergence = 2,
    kNothingToVerify = 3,
    kChecksFailed = 4,
};

struct Options {
    /// Overrides output.dir when set.
    std::optional<std::string> out_dir;
    /// Overrides solver.workers when set (0 = all cores).
    std::optional<unsigned> workers;
    std::uint64_t seed = 42;
    std::ostream* out = &std::cout;
    std::ostream* err = &std::cerr;
};

/// Seed from FBFLOW_SEED, or 42 when unset or unparsable.
inline std::uint64_t seed_from_env() {
    const char* s = std::getenv("FBFLOW_SEED");
    if (!s || !*s) return 42;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used == std::string(s).size()) return v;
    } catch (const std::exception&) {
    }
    return 42;
}

namespace detail {

inline std::optional<ExperimentConfig> load(const std::string& path, const Options& opt) {
    try {
        ExperimentConfig cfg = load_config(path);
        if (opt.out_dir) cfg.out_dir = *opt.out_dir;
        if (opt.workers) cfg.solver.workers = *opt.workers == 0 ? Workers::all_cores() : Workers{*opt.workers};
        for (const auto& w : cfg.warnings) *opt.err << "warning: " << w << '\n';
        return cfg;
    } catch (const ConfigError& e) {
        *opt.err << "config error: " << e.what() << '\n';
    } catch (const ContractError& e) {
        *opt.err << "config error: " << e.what() << '\n';
    }
    return std::nullopt;
}

inline std::filesystem::path prepare_out(const std::string& dir) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << text;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline nlohmann::json to_json(const EnergyBreakdown& e) {
    return {{"gradient_term", e.gradient_term},
            {"interface_term", e.interface_term},
            {"forcing_term", e.forcing_term},
            {"total", e.total}};
}

inline nlohmann::json to_json(const SolveResult& r) {
    return {{"energy", to_json(r.energy)},
            {"iterations", r.iterations},
            {"final_grad_norm", r.final_grad_norm},
            {"converged", r.converged},
            {"clamped", r.clamped},
            {"stop_reason", r.stop_reason}};
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

/// Edge slope statistics over the free-boundary points that leave room for a trace.
struct EdgeSlope {
    std::size_t fb_points = 0;
    double x1_min = nan(), x1_max = nan();
    double mean_slope = nan();
    double max_error = nan();
};

inline EdgeSlope edge_slope(const ScalarField& u, const ProblemData& data, std::size_t n_samples,
                            std::size_t max_points) {
    EdgeSlope out;
    const auto fb = extract_fb(u);
    out.fb_points = fb.size();
    if (fb.empty()) return out;
    out.x1_min = out.x1_max = fb.front()[0];
    for (const auto& x : fb) {
        out.x1_min = std::min(out.x1_min, x[0]);
        out.x1_max = std::max(out.x1_max, x[0]);
    }
    const Grid& g = u.grid();
    const double room = 2.0 * static_cast<double>(n_samples) * g.min_h() + 2.0 * g.min_h();
    double sum = 0.0, worst = 0.0;
    std::size_t used = 0;
    for (const auto& x : select_fb_points(fb, g, room, max_points)) {
        try {
            const double s = fb_gradient_trace(u, x, n_samples).measured_slope;
            const double target = lambda_star_at(data, x);
            sum += s;
            worst = std::max(worst, std::abs(s - target) / target);
            ++used;
        } catch (const PreconditionError&) {
        }
    }
    if (used > 0) {
        out.mean_slope = sum / static_cast<double>(used);
        out.max_error = worst;
    }
    return out;
}

/// True when each of the last three entries is at most (1 + slack) times its
/// predecessor. Shorter sequences pass.
inline bool nonincreasing_tail(const std::vector<double>& e, double slack = 0.10) {
    if (e.size() < 2) return true;
    const std::size_t first = e.size() >= 3 ? e.size() - 3 : 0;
    for (std::size_t k = first + 1; k < e.size(); ++k) {
        if (!std::isfinite(e[k]) || !std::isfinite(e[k - 1])) return false;
        if (e[k] > (1.0 + slack) * e[k - 1]) return false;
    }
    return true;
}

inline std::string csv_number(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// solve

/// Runs the configured minimization and writes u.field, energy.json and the trace CSV
/// (one per stage for a continuation ladder).
inline int cmd_solve(const std::string& config_path, const Options& opt = {}) {
    auto loaded = detail::load(config_path, opt);
    if (!loaded) return kConfigError;
    ExperimentConfig& cfg = *loaded;
    const auto dir = detail::prepare_out(cfg.out_dir);
    SolveConfig scfg = cfg.solver;
    scfg.trace_path = (dir / "trace.csv").string();

    nlohmann::json summary = {{"config", config_path}, {"warnings", cfg.warnings}};
    bool converged = false;
    if (cfg.mode == ExperimentConfig::Mode::regularized) {
        const SolveResult r = minimize_Jeps(cfg.problem(), cfg.boundary, cfg.boundary, scfg);
        save_field((dir / "u.field").string(), r.u);
        summary["mode"] = "regularized";
        summary["eps"] = cfg.final_eps();
        summary["J_eps"] = detail::to_json(r.energy);
        summary["J_sharp"] = detail::to_json(energy_J(r.u, cfg.problem(), 0.0, scfg.workers));
        summary["solve"] = detail::to_json(r);
        converged = r.converged;
    } else {
        const ContinuationResult r =
            minimize_J_continuation(cfg.problem(), cfg.boundary, cfg.schedule, scfg, cfg.sharpen);
        save_field((dir / "u.field").string(), r.final_u);
        save_field((dir / "u_eps.field").string(), r.raw_u());
        nlohmann::json stages = nlohmann::json::array();
        for (std::size_t k = 0; k < r.stages.size(); ++k) {
            const auto& st = r.stages[k];
            nlohmann::json row = {{"eps", st.eps},
                                  {"solve", detail::to_json(st.solve)},
                                  {"J_sharp", detail::to_json(st.sharp_energy)}};
            if (st.polish) row["polish"] = detail::to_json(*st.polish);
            if (cfg.schedule.eps_list.size() > 1) row["trace"] = stage_trace_path("trace.csv", k);
            stages.push_back(row);
        }
        summary["mode"] = "sharp-continuation";
        summary["J_sharp"] = detail::to_json(r.stages.back().sharp_energy);
        summary["J_eps"] = detail::to_json(r.stages.back().solve.energy);
        summary["stages"] = stages;
        if (r.failed_stage) summary["failed_stage"] = *r.failed_stage;
        converged = r.ok() && (!r.stages.back().polish || r.stages.back().polish->converged);
    }
    summary["converged"] = converged;
    detail::write_json(dir / "energy.json", summary);
    *opt.out << "solve: J = " << summary["J_sharp"]["total"].get<double>() << ", "
             << (converged ? "converged" : "NOT converged") << ", output in " << dir.string() << '\n';
    return converged ? kPass : kNonConvergence;
}

// ---------------------------------------------------------------------------
// verify

/// Checks a solution field against the weak free-boundary conditions and writes
/// report.json plus one scan CSV per kind.
inline int cmd_verify(const std::string& config_path, const std::string& field_path, const Options& opt = {}) {
    auto loaded = detail::load(config_path, opt);
    if (!loaded) return kConfigError;
    ExperimentConfig& cfg = *loaded;
    ScalarField u;
    try {
        u = load_field(field_path);
    } catch (const std::exception& e) {
        *opt.err << "config error: cannot read field '" << field_path << "': " << e.what() << '\n';
        return kConfigError;
    }
    if (!(u.grid() == cfg.grid)) {
        *opt.err << "config error: grid of '" << field_path << "' does not match the configured grid\n";
        return kConfigError;
    }
    const auto dir = detail::prepare_out(cfg.out_dir);
    const ProblemData& data = cfg.problem();

    FBReport rep = analyze_free_boundary(u, data, cfg.scan.report);
    if (rep.fb_points.empty()) {
        nlohmann::json j = {{"status", "no free boundary"},
                            {"field", field_path},
                            {"notes", {"u has no sign change on the grid; nothing to verify"}}};
        detail::write_json(dir / "report.json", j);
        *opt.out << "verify: no free boundary in " << field_path << '\n';
        return kNothingToVerify;
    }

    const double level = cfg.scan.residual_level >= 0.0 ? cfg.scan.residual_level
                         : cfg.mode == ExperimentConfig::Mode::sharp_continuation ? cfg.final_eps()
                                                                                 : 0.0;
    const double res_tol = cfg.scan.residual_tol > 0.0 ? cfg.scan.residual_tol : cfg.solver.tol_grad;
    const EquationResidual er = equation_residual(u, data, level, cfg.solver.delta);
    rep.max_equation_residual = er.max_residual;
    rep.residual_nodes = er.nodes_checked;
    const SubsolutionCheck sub = subsolution_check(u, data, cfg.scan.hats, opt.seed, 4, cfg.solver.delta);
    const bool residual_ok = er.max_residual <= res_tol;
    const bool sub_ok = sub.hats == 0 || sub.max_defect <= cfg.scan.hat_tol;

    nlohmann::json j = to_json(rep);
    j["status"] = "checked";
    j["field"] = field_path;
    j["equation_residual"]["level"] = level;
    j["equation_residual"]["tol"] = res_tol;
    j["equation_residual"]["pass"] = residual_ok;
    j["subsolution"] = {{"hats", sub.hats},
                        {"max_defect", sub.hats ? sub.max_defect : 0.0},
                        {"tol", cfg.scan.hat_tol},
                        {"pass", sub_ok}};
    const bool all = rep.checks.all() && residual_ok && sub_ok;
    j["checks"]["equation_residual"] = residual_ok;
    j["checks"]["subsolution"] = sub_ok;
    j["checks"]["all"] = all;
    detail::write_json(dir / "report.json", j);
    for (const char* kind : {"growth", "nondegeneracy", "density"})
        detail::write_text(dir / (std::string("scan_") + kind + ".csv"), scan_csv(rep, kind));

    *opt.out << "verify: " << rep.per_point.size() << " FB points, slope error " << rep.max_slope_error
             << ", C/lambda* range ok=" << rep.checks.growth << ", density ok=" << rep.checks.density
             << ", blowup ok=" << rep.checks.blowup << ", residual " << er.max_residual << " -> "
             << (all ? "PASS" : "FAIL") << '\n';
    return all ? kPass : kChecksFailed;
}

// ---------------------------------------------------------------------------
// continuation study

struct StudyRow {
    double eps = 0.0;
    double J_eps = 0.0;
    double J_sharp = 0.0;
    detail::EdgeSlope edge;
    bool converged = false;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    ContinuationResult run;
    bool converged = false;
    bool monotone_tail = false;
};

/// Runs the ladder and measures each stage's sharpened field.
inline StudyResult continuation_study(const ExperimentConfig& cfg, const SolveConfig& scfg) {
    StudyResult out;
    out.run = minimize_J_continuation(cfg.problem(), cfg.boundary, cfg.schedule, scfg, cfg.sharpen);
    std::vector<double> errors;
    for (const auto& st : out.run.stages) {
        StudyRow row;
        row.eps = st.eps;
        row.J_eps = st.solve.energy.total;
        row.J_sharp = st.sharp_energy.total;
        row.edge = detail::edge_slope(st.sharpened, cfg.problem(), cfg.scan.report.n_samples,
                                      cfg.scan.report.max_points);
        row.converged = st.solve.converged && (!st.polish || st.polish->converged);
        errors.push_back(row.edge.max_error);
        out.rows.push_back(row);
    }
    out.converged = out.run.ok();
    for (const auto& r : out.rows) out.converged = out.converged && r.converged;
    out.monotone_tail = detail::nonincreasing_tail(errors);
    return out;
}

inline std::string study_csv(const StudyResult& s) {
    std::ostringstream os;
    os << "eps,J_eps,J_sharp,fb_points,fb_x1_min,fb_x1_max,edge_slope,slope_error,converged\n";
    using detail::csv_number;
    for (const auto& r : s.rows) {
        os << csv_number(r.eps) << ',' << csv_number(r.J_eps) << ',' << csv_number(r.J_sharp) << ','
           << r.edge.fb_points << ',' << csv_number(r.edge.x1_min) << ',' << csv_number(r.edge.x1_max) << ','
           << csv_number(r.edge.mean_slope) << ',' << csv_number(r.edge.max_error) << ',' << (r.converged ? 1 : 0)
           << '\n';
    }
    return os.str();
}

/// Writes continuation.csv; exit 0 iff every stage converged and the slope errors
/// do not increase (10% relative slack) over the last three stages.
inline int cmd_continuation(const std::string& config_path, const Options& opt = {}) {
    auto loaded = detail::load(config_path, opt);
    if (!loaded) return kConfigError;
    ExperimentConfig& cfg = *loaded;
    if (cfg.mode != ExperimentConfig::Mode::sharp_continuation) {
        *opt.err << "config error: problem.mode: the continuation study needs sharp-continuation mode\n";
        return kConfigError;
    }
    const auto dir = detail::prepare_out(cfg.out_dir);
    SolveConfig scfg = cfg.solver;
    scfg.trace_path = (dir / "trace.csv").string();
    const StudyResult s = continuation_study(cfg, scfg);
    detail::write_text(dir / "continuation.csv", study_csv(s));
    save_field((dir / "u.field").string(), s.run.final_u);
    const double last = s.rows.empty() ? detail::nan() : s.rows.back().edge.max_error;
    *opt.out << "continuation: " << s.rows.size() << " stage(s), final slope error " << last
             << (s.monotone_tail ? ", tail nonincreasing" : ", tail NOT nonincreasing")
             << (s.converged ? "" : ", NOT converged") << '\n';
    if (!s.converged) return kNonConvergence;
    return s.monotone_tail ? kPass : kChecksFailed;
}

// ---------------------------------------------------------------------------
// oracle suites

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"lambda_star", "planar",      "ode",        "bruteforce",
                                                   "vexp",        "monotonicity", "comparison", "gradient"};
    return names;
}

/// Runs one named suite; nullopt for an unknown name.
inline std::optional<SuiteResult> run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "lambda_star") return lambda_star_suite(seed);
    if (name == "planar") return planar_suite(seed);
    if (name == "ode") return ode_suite();
    if (name == "bruteforce") return bruteforce_suite();
    if (name == "vexp") return vexp_suite(seed);
    if (name == "monotonicity") return monotonicity_suite(seed);
    if (name == "comparison") return comparison_suite(seed);
    if (name == "gradient") return gradient_suite(seed);
    return std::nullopt;
}

/// Runs `suite` (or every suite for "all") and writes oracle_<suite>.json into the
/// output directory (default "out").
inline int cmd_oracle(const std::string& suite, const Options& opt = {}) {
    std::vector<std::string> names;
    if (suite == "all") {
        names = suite_names();
    } else if (std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end()) {
        names = {suite};
    } else {
        *opt.err << "config error: unknown suite '" << suite << "' (expected all";
        for (const auto& n : suite_names()) *opt.err << ", " << n;
        *opt.err << ")\n";
        return kConfigError;
    }
    const auto dir = detail::prepare_out(opt.out_dir.value_or("out"));
    nlohmann::json summary = {{"suite", suite}, {"seed", opt.seed}, {"results", nlohmann::json::array()}};
    bool all = true;
    for (const auto& n : names) {
        const SuiteResult r = *run_suite(n, opt.seed);
        all = all && r.pass;
        summary["results"].push_back(
            {{"name", r.name}, {"pass", r.pass}, {"summary", r.summary}, {"seconds", r.seconds}, {"details", r.details}});
        *opt.out << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s): " << r.summary << '\n';
    }
    summary["pass"] = all;
    detail::write_json(dir / ("oracle_" + suite + ".json"), summary);
    return all ? kPass : kChecksFailed;
}

} // namespace fbflow::cli
