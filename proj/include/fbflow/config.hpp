#pragma once

/// @brief Experiment configuration: a line-oriented `key = value` format with
/// `[section]` headers, named analytic profiles for every input field, and
/// validation that names the violated modelling assumption.
///
/// Profiles (x is the node position, 1D grids use x[0] only):
///   const:c                      c
///   linear:a,b                   a + b * x[0]
///   linear:a,b,c                 a + b * x[0] + c * x[1]
///   sin                          product over axes of sin(pi (x - origin) / extent)
///   bump:center,width,height     height * max(0, 1 - (|x - center| / width)^2)^2 (1D)
///   bump:c1,c2,width,height      same with a 2D center
///   planar:alpha,n1,n2,offset    alpha * max(0, <x, n> - offset)
///   cone:c1,c2,radius,slope      slope * max(0, radius - |x - c|)
///   file:path                    field file (relative paths resolve against the config)

#include "fbflow/energy.hpp"
#include "fbflow/fbanalysis.hpp"
#include "fbflow/grid.hpp"
#include "fbflow/solver.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fbflow {

/// Config problem with the offending line when known.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Raw key/value document

class ConfigDoc {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static ConfigDoc parse(std::istream& is, const std::string& source = "<config>") {
        ConfigDoc doc;
        doc.source_ = source;
        std::string raw, section;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            const auto hash = raw.find('#');
            std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (text.empty()) continue;
            if (text.front() == '[') {
                if (text.back() != ']' || text.size() < 3)
                    throw ConfigError(source + ":" + std::to_string(line) + ": malformed section header '" + text + "'");
                section = trim(text.substr(1, text.size() - 2));
                if (!known_sections().count(section))
                    throw ConfigError(source + ":" + std::to_string(line) + ": unknown section [" + section + "]");
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string::npos)
                throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value', got '" + text + "'");
            if (section.empty())
                throw ConfigError(source + ":" + std::to_string(line) + ": key outside of any [section]");
            const std::string key = section + "." + trim(text.substr(0, eq));
            if (doc.entries_.count(key))
                throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
            doc.entries_[key] = {trim(text.substr(eq + 1)), line};
        }
        return doc;
    }

    static ConfigDoc load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot read config '" + path + "'");
        ConfigDoc doc = parse(is, path);
        doc.base_dir_ = std::filesystem::path(path).parent_path();
        return doc;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        used_.insert(key);
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    std::string str(const std::string& key) const {
        used_.insert(key);
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
        return it->second.value;
    }

    double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }
    double num(const std::string& key) const {
        const std::string v = str(key);
        return to_number(v, key);
    }

    long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const double v = num(key);
        if (v != std::floor(v)) fail(key, "expected an integer, got '" + str(key) + "'");
        return static_cast<long>(v);
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string v = str(key);
        if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
        if (v == "false" || v == "no" || v == "0" || v == "off") return false;
        fail(key, "expected true/false, got '" + v + "'");
        return false;
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : split(str(key), ',')) out.push_back(to_number(tok, key));
        return out;
    }

    /// "path:line: message" for the given key, or just the source when absent.
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        auto it = entries_.find(key);
        const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
        throw ConfigError(where + ": " + key + ": " + msg);
    }

    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, e] : entries_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    const std::filesystem::path& base_dir() const { return base_dir_; }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
        return out;
    }

private:
    static const std::set<std::string>& known_sections() {
        static const std::set<std::string> s{"problem", "grid", "boundary", "solver", "continuation", "scan", "output"};
        return s;
    }

    double to_number(const std::string& v, const std::string& key) const {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            fail(key, "expected a number, got '" + v + "'");
        }
        if (pos != v.size() || !std::isfinite(out)) fail(key, "expected a number, got '" + v + "'");
        return out;
    }

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
    std::string source_;
    std::filesystem::path base_dir_;
};

// ---------------------------------------------------------------------------
// Named profiles

/// Samples a profile string on the grid. Throws ConfigError naming `key` on failure.
inline ScalarField sample_profile(const std::string& spec, const Grid& g, const ConfigDoc& doc, const std::string& key) {
    const auto colon = spec.find(':');
    const std::string name = ConfigDoc::trim(spec.substr(0, colon));
    const std::string args_s = colon == std::string::npos ? "" : spec.substr(colon + 1);
    std::vector<double> a;
    if (name != "file" && !args_s.empty()) {
        for (const auto& tok : ConfigDoc::split(args_s, ',')) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                doc.fail(key, "profile argument '" + tok + "' is not a number");
            }
            if (pos != tok.size()) doc.fail(key, "profile argument '" + tok + "' is not a number");
            a.push_back(v);
        }
    }
    auto need = [&](std::size_t k, const char* usage) {
        if (a.size() != k) doc.fail(key, std::string("expected ") + usage);
    };
    if (name == "const") {
        need(1, "const:c");
        return ScalarField(g, a[0]);
    }
    if (name == "linear") {
        if (a.size() == 2) return ScalarField::sample(g, [&](Point x) { return a[0] + a[1] * x[0]; });
        need(3, "linear:a,b or linear:a,b,c");
        return ScalarField::sample(g, [&](Point x) { return a[0] + a[1] * x[0] + a[2] * x[1]; });
    }
    if (name == "sin") {
        need(0, "sin (no arguments)");
        return ScalarField::sample(g, [&](Point x) {
            double v = 1.0;
            for (int ax = 0; ax < g.dim(); ++ax)
                v *= std::sin(std::numbers::pi * (x[ax] - g.origin()[ax]) / g.extent()[ax]);
            return v;
        });
    }
    if (name == "bump") {
        Point c{0, 0};
        double w = 0, hgt = 0;
        if (g.dim() == 1) {
            need(3, "bump:center,width,height");
            c = {a[0], 0.0};
            w = a[1];
            hgt = a[2];
        } else {
            need(4, "bump:c1,c2,width,height");
            c = {a[0], a[1]};
            w = a[2];
            hgt = a[3];
        }
        if (!(w > 0.0)) doc.fail(key, "bump width must be positive");
        return ScalarField::sample(g, [&](Point x) {
            const double r = norm(x - c) / w;
            return r < 1.0 ? hgt * (1.0 - r * r) * (1.0 - r * r) : 0.0;
        });
    }
    if (name == "planar") {
        need(4, "planar:alpha,n1,n2,offset");
        const double len = std::hypot(a[1], a[2]);
        if (!(len > 0.0)) doc.fail(key, "planar normal must be nonzero");
        const Point n{a[1] / len, a[2] / len};
        return ScalarField::sample(g, [&](Point x) { return a[0] * std::max(0.0, dot(x, n) - a[3]); });
    }
    if (name == "cone") {
        need(4, "cone:c1,c2,radius,slope");
        const Point c{a[0], a[1]};
        return ScalarField::sample(g, [&](Point x) { return a[3] * std::max(0.0, a[2] - norm(x - c)); });
    }
    if (name == "file") {
        std::filesystem::path path = ConfigDoc::trim(args_s);
        if (path.empty()) doc.fail(key, "expected file:path");
        if (path.is_relative() && !doc.base_dir().empty()) path = doc.base_dir() / path;
        if (!std::filesystem::exists(path)) doc.fail(key, "field file '" + path.string() + "' does not exist");
        ScalarField u;
        try {
            u = load_field(path.string());
        } catch (const std::exception& e) {
            doc.fail(key, e.what());
        }
        if (!(u.grid() == g)) doc.fail(key, "field file '" + path.string() + "' does not match the configured grid");
        return u;
    }
    doc.fail(key, "unknown profile '" + name + "' (const, linear, sin, bump, planar, cone, file)");
}

// ---------------------------------------------------------------------------
// Typed experiment configuration

struct ScanConfig {
    ReportOptions report;
    /// Nodes whose neighbouring corners all exceed this level enter the equation residual;
    /// negative means "use eps_final" (continuation) or 0 (sharp fields).
    double residual_level = -1.0;
    double residual_tol = -1.0;
    std::size_t hats = 100;
    double hat_tol = 1e-6;
};

struct ExperimentConfig {
    enum class Mode { sharp_continuation, regularized };
    Mode mode = Mode::sharp_continuation;
    Grid grid;
    std::optional<ProblemData> data;
    ScalarField boundary;
    SolveConfig solver;
    ContinuationSchedule schedule;
    SharpenRule sharpen;
    ScanConfig scan;
    std::string out_dir = "out";
    std::vector<std::string> warnings;

    const ProblemData& problem() const { return *data; }

    /// Regularized mode eps, or the final continuation eps.
    double final_eps() const { return mode == Mode::regularized ? *data->eps() : schedule.eps_list.back(); }
};

namespace detail {

inline Grid parse_grid(const ConfigDoc& doc) {
    const long dim = doc.integer("grid.dim", 2);
    if (dim != 1 && dim != 2) doc.fail("grid.dim", "dimension must be 1 or 2");
    const auto origin = doc.list("grid.origin");
    const auto extent = doc.list("grid.extent");
    const auto n = doc.list("grid.n");
    const auto d = static_cast<std::size_t>(dim);
    if (origin.size() != d) doc.fail("grid.origin", "expected " + std::to_string(dim) + " value(s)");
    if (extent.size() != d) doc.fail("grid.extent", "expected " + std::to_string(dim) + " value(s)");
    if (n.size() != d) doc.fail("grid.n", "expected " + std::to_string(dim) + " value(s)");
    for (double e : extent)
        if (!(e > 0.0)) doc.fail("grid.extent", "extents must be positive");
    for (double k : n)
        if (k < 2 || k != std::floor(k)) doc.fail("grid.n", "node counts must be integers >= 2");
    if (dim == 1) return Grid::line(origin[0], extent[0], static_cast<std::size_t>(n[0]));
    return Grid::rect({origin[0], origin[1]}, {extent[0], extent[1]},
                      {static_cast<std::size_t>(n[0]), static_cast<std::size_t>(n[1])});
}

} // namespace detail

/// Builds and validates an experiment from a parsed document.
inline ExperimentConfig build_config(const ConfigDoc& doc) {
    ExperimentConfig cfg;
    const std::string mode = doc.str("problem.mode", "sharp-continuation");
    if (mode == "sharp-continuation") {
        cfg.mode = ExperimentConfig::Mode::sharp_continuation;
    } else if (mode == "regularized") {
        cfg.mode = ExperimentConfig::Mode::regularized;
    } else {
        doc.fail("problem.mode", "expected sharp-continuation or regularized");
    }
    cfg.grid = detail::parse_grid(doc);
    const Grid& g = cfg.grid;
    const double h = g.min_h();

    // Exponent, weight, forcing.
    ScalarField p = sample_profile(doc.str("problem.p", "const:2"), g, doc, "problem.p");
    if (!p.all_finite()) doc.fail("problem.p", "exponent has non-finite values");
    if (p.min() < ExponentField::kFloor)
        doc.fail("problem.p", "assumption violated: 1 < p_min (module floor p_min >= 1.05), got p_min = " +
                                  std::to_string(p.min()));
    ScalarField f = sample_profile(doc.str("problem.f", "const:0"), g, doc, "problem.f");
    ScalarField a = sample_profile(doc.str("problem.a", "const:1"), g, doc, "problem.a");
    if (!(a.min() > 0.0)) doc.fail("problem.a", "assumption violated: weight a >= a_0 > 0");

    // Interface coefficient: M for the reaction profile; lambda is accepted as an
    // alias when constant since the continuation limit has lambda = M.
    double mass = 1.0;
    if (doc.has("problem.M") && doc.has("problem.lambda"))
        doc.fail("problem.lambda", "give either M or lambda, not both");
    if (doc.has("problem.M")) {
        mass = doc.num("problem.M");
        if (!(mass > 0.0)) doc.fail("problem.M", "assumption violated: M = integral of beta must be positive");
    } else if (doc.has("problem.lambda")) {
        ScalarField lam = sample_profile(doc.str("problem.lambda"), g, doc, "problem.lambda");
        if (!(lam.min() > 0.0)) doc.fail("problem.lambda", "assumption violated: lambda >= lambda_1 > 0");
        if (lam.max() != lam.min())
            doc.fail("problem.lambda", "the continuation route needs a constant lambda (it becomes M)");
        mass = lam.min();
    }
    std::optional<double> eps;
    if (cfg.mode == ExperimentConfig::Mode::regularized) {
        eps = doc.num("problem.eps");
        if (!(*eps > 0.0)) doc.fail("problem.eps", "eps must be positive");
    } else if (doc.has("problem.eps")) {
        doc.fail("problem.eps", "eps belongs to regularized mode; use [continuation] for sharp-continuation");
    }
    try {
        cfg.data = ProblemData::regularized(ExponentField(std::move(p)),
                                            BetaProfile::by_name(doc.str("problem.beta", "polynomial"), mass), eps,
                                            std::move(f), std::move(a));
    } catch (const ContractError& e) {
        doc.fail("problem", e.what());
    }

    // Boundary data.
    cfg.boundary = sample_profile(doc.str("boundary.profile", "const:0"), g, doc, "boundary.profile");
    if (!cfg.boundary.all_finite()) doc.fail("boundary.profile", "boundary values must be finite");
    if (cfg.boundary.min() < 0.0)
        cfg.warnings.push_back("boundary data take negative values: nonnegativity of minimizers is not guaranteed");
    if (cfg.data->f().max() > 0.0)
        cfg.warnings.push_back("f > 0 somewhere: nonnegativity of minimizers is not guaranteed");

    // Solver.
    SolveConfig& s = cfg.solver;
    s.tol_grad = doc.num("solver.tol_grad", s.tol_grad);
    s.tol_energy = doc.num("solver.tol_energy", s.tol_energy);
    s.max_iters = doc.integer("solver.max_iters", s.max_iters);
    s.delta = doc.num("solver.delta", s.delta);
    s.stall_window = static_cast<int>(doc.integer("solver.stall_window", s.stall_window));
    s.precondition = doc.flag("solver.precondition", s.precondition);
    s.clamp_nonneg = doc.flag("solver.clamp_nonneg", s.clamp_nonneg);
    s.step_rule.armijo_c = doc.num("solver.armijo_c", s.step_rule.armijo_c);
    s.step_rule.backtrack = doc.num("solver.backtrack", s.step_rule.backtrack);
    const long workers = doc.integer("solver.workers", 0);
    if (workers < 0) doc.fail("solver.workers", "workers must be >= 0 (0 = all cores)");
    s.workers = workers == 0 ? Workers::all_cores() : Workers{static_cast<unsigned>(workers)};
    if (s.stall_window < 1) doc.fail("solver.stall_window", "must be at least 1");
    try {
        s.validate();
    } catch (const ContractError& e) {
        doc.fail("solver", e.what());
    }
    if (s.clamp_nonneg) cfg.warnings.push_back("clamp_nonneg is active: iterates are projected onto u >= 0");

    // Continuation schedule.
    if (cfg.mode == ExperimentConfig::Mode::sharp_continuation) {
        if (doc.has("continuation.eps_list")) {
            cfg.schedule.eps_list = doc.list("continuation.eps_list");
        } else {
            const double eps_final = doc.num("continuation.eps_final", 4.0 * h);
            const double eps0 = doc.num("continuation.eps0", std::max(0.5 * cfg.boundary.max(), eps_final));
            const double ratio = doc.num("continuation.ratio", 0.5);
            try {
                cfg.schedule = ContinuationSchedule::geometric(eps0, eps_final, ratio);
            } catch (const ContractError& e) {
                doc.fail("continuation", e.what());
            }
        }
        cfg.schedule.warm_start = doc.flag("continuation.warm_start", true);
        try {
            cfg.schedule.validate();
        } catch (const ContractError& e) {
            doc.fail("continuation.eps_list", e.what());
        }
        const std::string cut = doc.str("continuation.cut", "straighten");
        if (cut == "hard") {
            cfg.sharpen.cut = SharpenRule::Cut::hard;
        } else if (cut == "shifted") {
            cfg.sharpen.cut = SharpenRule::Cut::shifted;
        } else if (cut != "straighten") {
            doc.fail("continuation.cut", "expected straighten, hard or shifted");
        }
        cfg.sharpen.polish = doc.flag("continuation.polish", true);
        const std::string level = doc.str("continuation.level", "eps");
        if (level == "calibrated") {
            cfg.sharpen.level = SharpenRule::Level::calibrated;
        } else if (level != "eps") {
            doc.fail("continuation.level", "expected eps or calibrated");
        }
    }

    // Scans.
    ReportOptions& r = cfg.scan.report;
    r.max_points = static_cast<std::size_t>(doc.integer("scan.max_points", static_cast<long>(r.max_points)));
    r.min_points = static_cast<std::size_t>(doc.integer("scan.min_points", static_cast<long>(r.min_points)));
    r.n_samples = static_cast<std::size_t>(doc.integer("scan.n_samples", static_cast<long>(r.n_samples)));
    r.growth_k_max = static_cast<int>(doc.integer("scan.growth_k_max", r.growth_k_max));
    r.growth_k_min = static_cast<int>(doc.integer("scan.growth_k_min", r.growth_k_min));
    r.density_k_max = static_cast<int>(doc.integer("scan.density_k_max", r.density_k_max));
    r.density_k_min = static_cast<int>(doc.integer("scan.density_k_min", r.density_k_min));
    r.blowup_rho_h = doc.num("scan.blowup_rho_h", r.blowup_rho_h);
    r.threshold = doc.num("scan.threshold", r.threshold);
    r.slope_tol = doc.num("scan.slope_tol", r.slope_tol);
    r.growth_lo = doc.num("scan.growth_lo", r.growth_lo);
    r.growth_hi = doc.num("scan.growth_hi", r.growth_hi);
    r.nondeg_min = doc.num("scan.nondeg_min", r.nondeg_min);
    r.density_lo = doc.num("scan.density_lo", r.density_lo);
    r.density_hi = doc.num("scan.density_hi", r.density_hi);
    r.blowup_alpha_tol = doc.num("scan.blowup_alpha_tol", r.blowup_alpha_tol);
    r.blowup_residual_max = doc.num("scan.blowup_residual_max", r.blowup_residual_max);
    if (r.max_points < 1) doc.fail("scan.max_points", "must be at least 1");
    if (r.n_samples < 2) doc.fail("scan.n_samples", "must be at least 2");
    if (r.growth_k_min > r.growth_k_max || r.density_k_min > r.density_k_max)
        doc.fail("scan", "radius ladders need k_min <= k_max");
    cfg.scan.residual_level = doc.num("scan.residual_level", -1.0);
    cfg.scan.residual_tol = doc.num("scan.residual_tol", -1.0);
    cfg.scan.hats = static_cast<std::size_t>(doc.integer("scan.hats", 100));
    cfg.scan.hat_tol = doc.num("scan.hat_tol", cfg.scan.hat_tol);

    cfg.out_dir = doc.str("output.dir", "out");
    for (const auto& k : doc.unused_keys()) cfg.warnings.push_back("unused config key '" + k + "'");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) { return build_config(ConfigDoc::load(path)); }

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return build_config(ConfigDoc::parse(is));
}

} // namespace fbflow
