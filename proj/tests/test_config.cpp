#include "fbflow/cli.hpp"
#include "fbflow/config.hpp"
#include "fbflow/oracles.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fbflow;
namespace fs = std::filesystem;

namespace {

const char* kSlab = R"(
[problem]
p = const:2
M = 1
[grid]
dim = 1
origin = 0
extent = 1
n = 65
[boundary]
profile = linear:0,0.8
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

/// Fresh directory per test under the system temp dir.
fs::path temp_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fbflow_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream is(p);
    return nlohmann::json::parse(is);
}

struct Quiet {
    std::ostringstream out, err;
    cli::Options opt(const fs::path& dir) {
        cli::Options o;
        o.out_dir = dir.string();
        o.out = &out;
        o.err = &err;
        return o;
    }
};

const char* kPlanarCoarse = R"(
[problem]
p = const:2
M = 1
[grid]
dim = 2
origin = -1, 0
extent = 2, 1
n = 129, 65
[boundary]
profile = planar:1.4142135623730951,1,0,0
[continuation]
eps_final = 0.125
[scan]
growth_k_max = 4
density_k_max = 4
blowup_rho_h = 16
)";

} // namespace

// ---------------------------------------------------------------------------
// Parsing

TEST(Config, ParsesSlabDefaults) {
    const ExperimentConfig c = parse_config(kSlab);
    EXPECT_EQ(c.mode, ExperimentConfig::Mode::sharp_continuation);
    EXPECT_EQ(c.grid.dim(), 1);
    EXPECT_EQ(c.grid.node_count(), 65u);
    EXPECT_DOUBLE_EQ(c.boundary.at(64), 0.8);
    EXPECT_DOUBLE_EQ(c.final_eps(), 4.0 / 64.0);
    EXPECT_EQ(c.sharpen.cut, SharpenRule::Cut::straighten);
    EXPECT_TRUE(c.sharpen.polish);
    EXPECT_TRUE(c.warnings.empty());
    EXPECT_EQ(c.out_dir, "out");
}

TEST(Config, GeometricLadderFromEndpoints) {
    const ExperimentConfig c = parse_config(std::string(kSlab) + "[continuation]\neps0 = 0.5\neps_final = 0.0625\n");
    ASSERT_EQ(c.schedule.eps_list.size(), 4u);
    EXPECT_DOUBLE_EQ(c.schedule.eps_list.front(), 0.5);
    EXPECT_DOUBLE_EQ(c.schedule.eps_list.back(), 0.0625);
}

TEST(Config, ExplicitLadderMustDecrease) {
    const std::string e = error_of(std::string(kSlab) + "[continuation]\neps_list = 0.1, 0.2\n");
    EXPECT_NE(e.find("continuation.eps_list"), std::string::npos) << e;
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(error_of("[problem]\np = const:2\nbogus line\n").find(":3:"), std::string::npos);
    EXPECT_NE(error_of("[nosuch]\n").find("unknown section"), std::string::npos);
    EXPECT_NE(error_of("p = 2\n").find("outside of any"), std::string::npos);
    EXPECT_NE(error_of("[problem]\np = const:2\np = const:3\n").find("duplicate"), std::string::npos);
    const std::string bad_num = error_of(std::string(kSlab) + "[solver]\ntol_grad = abc\n");
    EXPECT_NE(bad_num.find(":13: solver.tol_grad"), std::string::npos) << bad_num;
}

TEST(Config, ExponentBelowFloorNamesAssumption) {
    std::string text = kSlab;
    text.replace(text.find("const:2"), 7, "const:0.9");
    const std::string e = error_of(text);
    EXPECT_NE(e.find("assumption"), std::string::npos) << e;
    EXPECT_NE(e.find("problem.p"), std::string::npos) << e;
}

TEST(Config, NonpositiveMassAndWeightRejected) {
    std::string m = kSlab;
    m.replace(m.find("M = 1"), 5, "M = 0");
    EXPECT_NE(error_of(m).find("assumption"), std::string::npos);
    EXPECT_NE(error_of(std::string(kSlab) + "[problem]\na = const:0\n").find("assumption"), std::string::npos);
}

TEST(Config, LambdaAliasAndConflict) {
    std::string lam = kSlab;
    lam.replace(lam.find("M = 1"), 5, "lambda = const:2");
    const ExperimentConfig c = parse_config(lam);
    EXPECT_DOUBLE_EQ(c.problem().beta()->primitive(1.0), 2.0);
    std::string both = kSlab;
    both.replace(both.find("M = 1"), 5, "M = 1\nlambda = const:1");
    EXPECT_NE(error_of(both).find("not both"), std::string::npos);
    std::string varying = kSlab;
    varying.replace(varying.find("M = 1"), 5, "lambda = linear:1,1");
    EXPECT_NE(error_of(varying).find("constant lambda"), std::string::npos);
}

TEST(Config, RegularizedModeNeedsEps) {
    std::string r = kSlab;
    r.replace(r.find("[problem]"), 9, "[problem]\nmode = regularized");
    EXPECT_NE(error_of(r).find("problem.eps"), std::string::npos);
    r.replace(r.find("M = 1"), 5, "M = 1\neps = 0.1");
    const ExperimentConfig c = parse_config(r);
    EXPECT_EQ(c.mode, ExperimentConfig::Mode::regularized);
    EXPECT_DOUBLE_EQ(c.final_eps(), 0.1);
}

TEST(Config, WarningsForUnusedKeysAndSignData) {
    std::string t = kSlab;
    t.replace(t.find("linear:0,0.8"), 12, "linear:-0.1,0.8");
    const ExperimentConfig c = parse_config(t + "[output]\ncolour = blue\n");
    ASSERT_EQ(c.warnings.size(), 2u);
    EXPECT_NE(c.warnings[0].find("negative"), std::string::npos);
    EXPECT_NE(c.warnings[1].find("output.colour"), std::string::npos);
}

TEST(Config, CutAndLevelOptions) {
    const ExperimentConfig c =
        parse_config(std::string(kSlab) + "[continuation]\ncut = hard\npolish = false\nlevel = calibrated\n");
    EXPECT_EQ(c.sharpen.cut, SharpenRule::Cut::hard);
    EXPECT_FALSE(c.sharpen.polish);
    EXPECT_EQ(c.sharpen.level, SharpenRule::Level::calibrated);
    EXPECT_NE(error_of(std::string(kSlab) + "[continuation]\ncut = soft\n").find("continuation.cut"),
              std::string::npos);
}

// ---------------------------------------------------------------------------
// Profiles

TEST(Profiles, AnalyticShapes) {
    ConfigDoc doc;
    const Grid g2 = Grid::rect({-1, 0}, {2, 1}, {21, 11});
    const ScalarField pl = sample_profile("planar:2,1,0,0.5", g2, doc, "k");
    EXPECT_DOUBLE_EQ(pl.at(20, 3), 2.0 * 0.5);
    EXPECT_DOUBLE_EQ(pl.at(5, 3), 0.0);
    const ScalarField cone = sample_profile("cone:0,0.5,0.25,2", g2, doc, "k");
    EXPECT_DOUBLE_EQ(cone.at(10, 5), 0.5);
    const ScalarField s = sample_profile("sin", g2, doc, "k");
    EXPECT_NEAR(s.at(10, 5), 1.0, 1e-12);
    EXPECT_NEAR(s.at(0, 5), 0.0, 1e-12);
    const ScalarField lin = sample_profile("linear:1,2,3", g2, doc, "k");
    EXPECT_DOUBLE_EQ(lin.at(20, 10), 1.0 + 2.0 + 3.0);
    const Grid g1 = Grid::line(0, 1, 11);
    const ScalarField b = sample_profile("bump:0.5,0.25,3", g1, doc, "k");
    EXPECT_DOUBLE_EQ(b.at(5), 3.0);
    EXPECT_DOUBLE_EQ(b.at(1), 0.0);
}

TEST(Profiles, BadProfilesRejected) {
    ConfigDoc doc;
    const Grid g = Grid::line(0, 1, 11);
    EXPECT_THROW(sample_profile("nope:1", g, doc, "k"), ConfigError);
    EXPECT_THROW(sample_profile("const:1,2", g, doc, "k"), ConfigError);
    EXPECT_THROW(sample_profile("linear:a,b", g, doc, "k"), ConfigError);
    EXPECT_THROW(sample_profile("bump:0.5,0,1", g, doc, "k"), ConfigError);
    EXPECT_THROW(sample_profile("file:/nonexistent/u.field", g, doc, "k"), ConfigError);
}

TEST(Profiles, FileProfileResolvesRelativeAndChecksGrid) {
    const fs::path dir = temp_dir("file_profile");
    const Grid g = Grid::line(0, 1, 65);
    save_field((dir / "b.field").string(), ScalarField(g, 0.25));
    std::string text = kSlab;
    text.replace(text.find("linear:0,0.8"), 12, "file:b.field");
    const fs::path cfg = write_file(dir, "c.cfg", text);
    const ExperimentConfig c = load_config(cfg.string());
    EXPECT_DOUBLE_EQ(c.boundary.at(10), 0.25);

    save_field((dir / "b.field").string(), ScalarField(Grid::line(0, 1, 33), 0.25));
    EXPECT_THROW(load_config(cfg.string()), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
    const fs::path root = fs::path(FBFLOW_SOURCE_DIR) / "configs";
    int n = 0;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.path().extension() != ".cfg") continue;
        ++n;
        EXPECT_NO_THROW({
            const ExperimentConfig c = load_config(e.path().string());
            EXPECT_TRUE(c.warnings.empty()) << e.path();
        }) << e.path();
    }
    EXPECT_GE(n, 8);
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, ZeroBoundaryGivesZeroSolution) {
    const fs::path dir = temp_dir("zero");
    std::string text = kSlab;
    text.replace(text.find("linear:0,0.8"), 12, "const:0");
    const fs::path cfg = write_file(dir, "c.cfg", text);
    Quiet q;
    EXPECT_EQ(cli::cmd_solve(cfg.string(), q.opt(dir / "out")), cli::kPass) << q.err.str();
    const ScalarField u = load_field((dir / "out" / "u.field").string());
    EXPECT_EQ(u.max(), 0.0);
    EXPECT_EQ(u.min(), 0.0);
    const auto j = read_json(dir / "out" / "energy.json");
    EXPECT_EQ(j["J_sharp"]["total"].get<double>(), 0.0);
    EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(Cli, ConfigErrorsExitOne) {
    const fs::path dir = temp_dir("cfgerr");
    Quiet q;
    EXPECT_EQ(cli::cmd_solve((dir / "missing.cfg").string(), q.opt(dir)), cli::kConfigError);
    std::string text = kSlab;
    text.replace(text.find("const:2"), 7, "const:0.9");
    const fs::path cfg = write_file(dir, "c.cfg", text);
    EXPECT_EQ(cli::cmd_solve(cfg.string(), q.opt(dir)), cli::kConfigError);
    EXPECT_NE(q.err.str().find("assumption"), std::string::npos);
}

TEST(Cli, VerifyPositiveFieldHasNothingToVerify) {
    const fs::path dir = temp_dir("positive");
    const fs::path cfg = write_file(dir, "c.cfg", kSlab);
    save_field((dir / "one.field").string(), ScalarField(Grid::line(0, 1, 65), 1.0));
    Quiet q;
    EXPECT_EQ(cli::cmd_verify(cfg.string(), (dir / "one.field").string(), q.opt(dir / "out")),
              cli::kNothingToVerify);
    EXPECT_EQ(read_json(dir / "out" / "report.json")["status"], "no free boundary");
}

TEST(Cli, VerifyGridMismatchIsConfigError) {
    const fs::path dir = temp_dir("mismatch");
    const fs::path cfg = write_file(dir, "c.cfg", kSlab);
    save_field((dir / "u.field").string(), ScalarField(Grid::line(0, 1, 33), 0.0));
    Quiet q;
    EXPECT_EQ(cli::cmd_verify(cfg.string(), (dir / "u.field").string(), q.opt(dir / "out")), cli::kConfigError);
    EXPECT_EQ(cli::cmd_verify(cfg.string(), (dir / "absent.field").string(), q.opt(dir / "out")),
              cli::kConfigError);
}

TEST(Cli, VerifyPlanarOraclePasses) {
    const fs::path dir = temp_dir("planar_verify");
    const fs::path cfg = write_file(dir, "c.cfg", kPlanarCoarse);
    const ExperimentConfig c = load_config(cfg.string());
    save_field((dir / "u.field").string(), planar_oracle(2.0, 1.0, {1.0, 0.0}, 0.0, c.grid));
    Quiet q;
    EXPECT_EQ(cli::cmd_verify(cfg.string(), (dir / "u.field").string(), q.opt(dir / "out")), cli::kPass)
        << q.out.str() << q.err.str();
    const auto j = read_json(dir / "out" / "report.json");
    EXPECT_EQ(j["status"], "checked");
    EXPECT_LT(j["max_slope_error"].get<double>(), 1e-6);
    for (const char* kind : {"growth", "nondegeneracy", "density"})
        EXPECT_TRUE(fs::exists(dir / "out" / (std::string("scan_") + kind + ".csv")));
}

TEST(Cli, VerifyShiftedPlanarFails) {
    // Slope 2 instead of sqrt(2) violates the free-boundary condition.
    const fs::path dir = temp_dir("planar_wrong");
    const fs::path cfg = write_file(dir, "c.cfg", kPlanarCoarse);
    const ExperimentConfig c = load_config(cfg.string());
    save_field((dir / "u.field").string(), planar_oracle(2.0, 2.0, {1.0, 0.0}, 0.0, c.grid));
    Quiet q;
    EXPECT_EQ(cli::cmd_verify(cfg.string(), (dir / "u.field").string(), q.opt(dir / "out")), cli::kChecksFailed);
}

TEST(Cli, SingleStageLadderRuns) {
    const fs::path dir = temp_dir("single");
    const fs::path cfg = write_file(dir, "c.cfg", std::string(kSlab) + "[continuation]\neps_list = 0.0625\n");
    Quiet q;
    EXPECT_EQ(cli::cmd_continuation(cfg.string(), q.opt(dir / "out")), cli::kPass) << q.out.str() << q.err.str();
    std::ifstream is(dir / "out" / "continuation.csv");
    std::string header, row, extra;
    std::getline(is, header);
    std::getline(is, row);
    EXPECT_EQ(header, "eps,J_eps,J_sharp,fb_points,fb_x1_min,fb_x1_max,edge_slope,slope_error,converged");
    EXPECT_FALSE(row.empty());
    EXPECT_FALSE(std::getline(is, extra));
}

TEST(Cli, ContinuationNeedsSharpMode) {
    const fs::path dir = temp_dir("cont_mode");
    std::string r = kSlab;
    r.replace(r.find("M = 1"), 5, "M = 1\nmode = regularized\neps = 0.1");
    const fs::path cfg = write_file(dir, "c.cfg", r);
    Quiet q;
    EXPECT_EQ(cli::cmd_continuation(cfg.string(), q.opt(dir / "out")), cli::kConfigError);
}

TEST(Cli, OracleSuites) {
    const fs::path dir = temp_dir("oracle");
    Quiet q;
    EXPECT_EQ(cli::cmd_oracle("nosuch", q.opt(dir)), cli::kConfigError);
    EXPECT_EQ(cli::cmd_oracle("planar", q.opt(dir)), cli::kPass) << q.out.str();
    EXPECT_EQ(cli::cmd_oracle("vexp", q.opt(dir)), cli::kPass) << q.out.str();
    const auto j = read_json(dir / "oracle_planar.json");
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), 42u);
}

TEST(Cli, SeedFromEnvironment) {
    ::setenv("FBFLOW_SEED", "7", 1);
    EXPECT_EQ(cli::seed_from_env(), 7u);
    ::setenv("FBFLOW_SEED", "x7", 1);
    EXPECT_EQ(cli::seed_from_env(), 42u);
    ::unsetenv("FBFLOW_SEED");
    EXPECT_EQ(cli::seed_from_env(), 42u);
}
