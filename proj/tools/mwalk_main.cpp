#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mwalk/errors.hpp"
#include "mwalk/experiments.hpp"

namespace {

// Exit codes: 0 success, 2 config/validation error, 3 numerical hard error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

unsigned env_workers() {
    const char* value = std::getenv("MWALK_WORKERS");
    if (value == nullptr) return 0;
    const long parsed = std::strtol(value, nullptr, 10);
    return parsed > 0 ? static_cast<unsigned>(parsed) : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walk on GL_d(R): config-driven limit-theorem experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    unsigned workers_override = 0;
    bool has_workers = false;

    CLI::App* run = app.add_subcommand("run", "Execute an experiment config");
    run->add_option("config", config_path, "JSON experiment config")->required();
    run->add_option("--seed", seed_override, "Override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    run->add_option("--workers", workers_override, "Override the worker count")
        ->each([&](const std::string&) { has_workers = true; });
    run->add_option("--out-dir", out_dir, "Output directory (default .)");
    run->add_option("--format", format, "Table format: csv | json")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI::App* describe = app.add_subcommand("describe", "Print the experiment plan (dry run)");
    describe->add_option("config", config_path, "JSON experiment config")->required();
    describe->add_option("--seed", seed_override, "Override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    describe->add_option("--workers", workers_override, "Override the worker count")
        ->each([&](const std::string&) { has_workers = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        mwalk::ExperimentConfig config = mwalk::parse_config_file(config_path);
        if (has_seed) config.seed = seed_override;
        if (has_workers) {
            config.workers = workers_override;
        } else if (config.workers == 0) {
            config.workers = env_workers();
        }

        if (describe->parsed()) {
            std::cout << mwalk::describe(config);
            return kExitOk;
        }

        const mwalk::RunArtifacts artifacts = mwalk::run_experiment(config, out_dir, format);
        std::cout << "wrote " << out_dir << "/" << artifacts.files.front() << "\n"
                  << "wrote " << artifacts.manifest_path << "\n"
                  << artifacts.summary_json << "\n";
        return kExitOk;
    } catch (const mwalk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mwalk::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
