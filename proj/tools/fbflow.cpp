// Command-line front end: fbflow solve|verify|continuation|oracle.

#include "fbflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    namespace cli = fbflow::cli;
    CLI::App app{"fbflow: variational free-boundary solver and verifier"};
    app.require_subcommand(1);

    std::string config, field, suite, out;
    unsigned workers = 0;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", out, "Output directory (overrides output.dir)");
        sub->add_option("--workers", workers, "Worker threads (0 = all cores)");
    };

    auto* solve = app.add_subcommand("solve", "Minimize the configured energy and write u, energy and trace");
    solve->add_option("config", config, "Experiment config file")->required();
    common(solve);

    auto* verify = app.add_subcommand("verify", "Check a field against the weak free-boundary conditions");
    verify->add_option("config", config, "Experiment config file")->required();
    verify->add_option("field", field, "Solution field file (default: <out>/u.field)");
    common(verify);

    auto* cont = app.add_subcommand("continuation", "Run the eps ladder and tabulate slopes per stage");
    cont->add_option("config", config, "Experiment config file")->required();
    common(cont);

    auto* oracle = app.add_subcommand("oracle", "Run oracle and property suites");
    oracle->add_option("suite", suite, "Suite name or 'all'")->required();
    common(oracle);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kConfigError;
    }

    cli::Options opt;
    opt.seed = cli::seed_from_env();
    if (!out.empty()) opt.out_dir = out;
    auto* active = app.get_subcommands().front();
    if (active->count("--workers") > 0) opt.workers = workers;

    try {
        if (active == solve) return cli::cmd_solve(config, opt);
        if (active == verify) {
            if (field.empty()) {
                auto cfg = fbflow::load_config(config);
                field = (std::filesystem::path(opt.out_dir.value_or(cfg.out_dir)) / "u.field").string();
            }
            return cli::cmd_verify(config, field, opt);
        }
        if (active == cont) return cli::cmd_continuation(config, opt);
        return cli::cmd_oracle(suite, opt);
    } catch (const fbflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kNonConvergence;
    }
}
