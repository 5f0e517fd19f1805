#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "vex/suite.hpp"

int main(int argc, char** argv) {
    CLI::App app{"vexlab: verification suites for variable-exponent inequality chains"};
    app.require_subcommand(1);

    std::string suite, config_path, out_dir, format = "both";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;

    CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("suite", suite,
                       "holder | scaling | transport | key-estimate | log-lemma | sobolev | "
                       "trace | all")
        ->required();
    verify->add_option("--config", config_path, "experiment config (JSON)")->required();
    verify->add_option("--out", out_dir, "output directory (default: config, then $VEXLAB_OUT)");
    verify->add_option("--format", format, "json | csv | both (default both)");
    verify->add_option("--seed", seed, "override the config RNG seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    verify->add_option("--jobs", jobs, "worker pool size (default 1)");

    CLI::App* schema = app.add_subcommand("schema", "print the config schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (schema->parsed()) {
        std::cout << vex::cli::config_schema() << std::endl;
        return 0;
    }

    try {
        vex::cli::ExperimentConfig cfg = vex::cli::load_config(config_path);
        if (seed_set) cfg.family.seed = seed;
        if (out_dir.empty()) {
            out_dir = cfg.output_dir;
            if (out_dir.empty()) {
                const char* env = std::getenv(vex::cli::kOutputDirEnvVar);
                out_dir = env ? env : ".";
            }
        }
        vex::cli::SuiteResult result = vex::cli::run_suite(cfg, suite, jobs);
        vex::cli::emit_report(result, out_dir, format);

        int failures = 0;
        for (const auto& r : result.reports)
            if (!r.pass()) ++failures;
        std::cout << "suite " << suite << ": " << result.reports.size() << " checks, "
                  << failures << " failures" << std::endl;
        return failures == 0 ? 0 : 1;
    } catch (const vex::Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << std::endl;
        return 2;
    }
}
