#pragma once

// Top-level driver shared by the executable and the tests.

#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ivsim/cli/experiments.hpp"
#include "ivsim/cli/validation.hpp"

namespace ivsim::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kValidationFailed = 2 };

inline void print_banner(const std::vector<std::string>& warnings, std::ostream& log) {
    if (warnings.empty()) return;
    log << "==================== WARNING ====================\n";
    for (const auto& w : warnings) log << "  " << w << '\n';
    log << "=================================================\n";
}

/// Runs one configured experiment into cfg.out_dir and writes summary.json.
inline int run(const ExperimentConfig& cfg, std::ostream& log) {
    const auto& dir = cfg.out_dir;
    std::filesystem::create_directories(dir);
    std::vector<std::string> warnings;
    if (cfg.kind != ExperimentKind::sweep && cfg.kind != ExperimentKind::validate)
        warnings = hypothesis_warnings(cfg.params);
    print_banner(warnings, log);

    const auto t0 = std::chrono::steady_clock::now();
    Json results;
    int code = kOk;
    switch (cfg.kind) {
        case ExperimentKind::sweep:
            results = run_sweep(cfg, dir, warnings);
            print_banner(warnings, log);
            break;
        case ExperimentKind::validate: {
            Validator v(cfg.params, ValidationSizes::for_scale(cfg.scale), cfg.jobs, dir / "scratch");
            const auto rs = v.run_all([&](const CriterionResult& r) {
                log << (r.pass() ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.title << "  ("
                    << format_number(std::round(r.seconds * 10) / 10) << " s)\n";
                for (const auto& row : r.rows)
                    log << "        " << row.name << " = " << format_number(row.statistic)
                        << " (threshold " << format_number(row.threshold) << ")" << (row.pass ? "" : "  <- fails")
                        << '\n';
                log.flush();
            });
            std::filesystem::remove_all(dir / "scratch");
            write_validation_csv(rs, dir / "validation.csv");
            results = validation_json(rs);
            for (const auto& r : rs)
                if (!r.pass()) code = kValidationFailed;
            break;
        }
        default:
            results = run_single(cfg, dir);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Json doc;
    doc["experiment"] = to_string(cfg.kind);
    if (cfg.kind == ExperimentKind::sweep) doc["sweep_kind"] = to_string(cfg.sweep_kind);
    if (cfg.kind == ExperimentKind::validate) doc["scale"] = cfg.scale == ValidationScale::full ? "full" : "quick";
    doc["seed"] = cfg.params.seed;
    doc["code_version"] = kCodeVersion;
    doc["jobs"] = cfg.jobs;
    doc["parameters"] = params_json(cfg.params);
    if (!cfg.grid.empty()) {
        Json g;
        for (const auto& [name, values] : cfg.grid) g[name] = values;
        doc["grid"] = g;
    }
    doc["diagnostics"] = model_diagnostics(cfg.params);
    doc["warnings"] = warnings;
    doc["results"] = results;
    doc["wall_seconds"] = seconds;
    write_json(dir / "summary.json", doc);
    log << "wrote " << (dir / "summary.json").string() << '\n';
    return code;
}

}  // namespace ivsim::cli
