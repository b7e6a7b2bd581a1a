#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivsim/cli/runner.hpp"

using namespace ivsim::cli;

int main(int argc, char** argv) {
    CLI::App app{"Information-velocity simulator for power-controlled Poisson networks"};
    std::string config_path, experiment, out, seed;
    std::optional<unsigned> jobs;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--experiment", experiment, "exit-time | velocity | aloha-baseline | validate | sweep");
    app.add_option("--seed", seed, "master seed (required here or in the config)");
    app.add_option("--out", out, "output directory");
    app.add_option("--jobs", jobs, "worker threads");
    app.add_option("--set", sets, "override key=value (repeatable)")->take_all();
    CLI11_PARSE(app, argc, argv);

    try {
        // Later entries win: file, then --set, then the dedicated flags.
        std::vector<Setting> settings;
        if (!config_path.empty()) settings = read_config_file(config_path);
        for (const auto& s : sets) settings.push_back(parse_assignment(s));
        if (!experiment.empty()) settings.push_back({"experiment", experiment});
        if (!seed.empty()) settings.push_back({"seed", seed});
        if (!out.empty()) settings.push_back({"out", out});
        if (jobs) settings.push_back({"jobs", std::to_string(*jobs)});
        const ExperimentConfig cfg = build_config(settings);
        return run(cfg, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
