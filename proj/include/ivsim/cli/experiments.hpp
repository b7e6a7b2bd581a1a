#pragma once

// Experiment runners: exit-time (power control or ALOHA), tagged-packet
// velocity, and parameter sweeps. Each writes its CSV series into the output
// directory and returns a JSON summary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ivsim/analysis/bounds.hpp"
#include "ivsim/analysis/estimators.hpp"
#include "ivsim/cli/config.hpp"
#include "ivsim/cli/output.hpp"
#include "ivsim/cli/parallel.hpp"
#include "ivsim/engine.hpp"

namespace ivsim::cli {

inline constexpr const char* kCodeVersion = "0.1.0";

inline StreamKey replication_key(const SimParams& p, std::uint64_t r) {
    return StreamKey(p.seed).child(Purpose::replication).child(r);
}

inline Json params_json(const SimParams& p) {
    Json j;
    j["lambda"] = p.lambda;
    j["alpha"] = p.alpha;
    j["mu"] = p.mu;
    j["beta"] = p.beta;
    j["gamma"] = p.gamma;
    j["noise"] = p.noise;
    j["avg_power"] = p.avg_power;
    j["epsilon"] = p.epsilon;
    j["cones"] = p.cones;
    j["window_x"] = p.window_x;
    j["window_y"] = p.window_y;
    j["guard"] = p.guard;
    j["horizon"] = p.horizon;
    j["replications"] = p.replications;
    j["seed"] = p.seed;
    j["policy"] = p.policy == PolicyKind::aloha ? "aloha" : "power_control";
    j["cone_choice"] = p.cone_choice == ConeChoiceModel::worst_case ? "worst_case" : "uniform_random";
    j["stationary_mode"] = p.stationary_mode;
    j["aloha_prob"] = p.aloha_prob;
    j["aloha_power"] = p.aloha().power;
    j["interference_radius"] = p.interference_radius;
    return j;
}

inline Json ci_json(const analysis::MeanCI& ci) {
    return {{"n", ci.n}, {"mean", ci.mean}, {"se", ci.se}, {"ci95", {ci.lo, ci.hi}}};
}

/// Warnings about hypotheses the run violates; empty when none.
inline std::vector<std::string> hypothesis_warnings(const SimParams& p) {
    std::vector<std::string> out;
    if (p.policy == PolicyKind::power_control && !p.finiteness_condition())
        out.push_back("beta*gamma = " + format_number(p.beta * p.gamma) +
                      " >= 1: the finite-mean exit-time result does not apply to this run");
    return out;
}

inline Json model_diagnostics(const SimParams& p) {
    Json j;
    j["finiteness_condition"] = p.finiteness_condition();
    const double radius = p.interference_radius > 0.0 ? p.interference_radius : p.guard;
    if (radius >= 1.0) {
        const double tail = truncated_interference_tail(p.lambda, p.avg_power, p.mu, p.alpha, radius);
        j["neglected_interference_mean"] = tail;
        j["neglected_interference_over_noise"] = tail / p.noise;
    }
    if (p.policy == PolicyKind::power_control && p.finiteness_condition())
        j["mean_exit_time_upper_bound"] = analysis::mean_exit_time_bound(p);
    return j;
}

// ---------------------------------------------------------------------------
// Exit time

struct ExitTimeSample {
    std::uint64_t phi_seed = 0;
    std::uint64_t slots = 0;
    bool censored = false;
};

inline std::vector<ExitTimeSample> exit_time_samples(const SimParams& p, unsigned jobs) {
    return parallel_map(p.replications, jobs, [&](std::size_t r) {
        const StreamKey key = replication_key(p, r);
        const auto res = run_exit_time(p, key);
        return ExitTimeSample{key.child(Purpose::phi).value(), res.slots, res.censored};
    });
}

/// Exit times as doubles, censored samples at their horizon value.
inline std::vector<double> exit_time_values(const std::vector<ExitTimeSample>& s) {
    std::vector<double> out;
    out.reserve(s.size());
    for (const auto& x : s) out.push_back(static_cast<double>(x.slots));
    return out;
}

inline std::size_t censored_count(const std::vector<ExitTimeSample>& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](const auto& x) { return x.censored; }));
}

inline Json summarize_exit_times(const std::vector<ExitTimeSample>& samples, const SimParams& p) {
    Json j;
    const auto values = exit_time_values(samples);
    const auto censored = censored_count(samples);
    j["n"] = samples.size();
    j["censored"] = censored;
    j["censored_fraction"] = samples.empty() ? 0.0 : static_cast<double>(censored) / samples.size();
    if (samples.empty()) return j;
    j["T"] = ci_json(analysis::mean_ci(values));
    j["T"]["censored_entered_at_horizon"] = true;
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    j["T"]["median"] = sorted[sorted.size() / 2];
    j["T"]["max"] = sorted.back();
    if (values.size() >= 2) {
        j["running_mean_final_half_change"] = analysis::running_mean_final_half_change(values);
        const auto rm = analysis::running_mean(values);
        Json series = Json::array();
        for (std::size_t n = 10; n <= rm.size(); n *= 2) series.push_back({{"n", n}, {"mean", rm[n - 1]}});
        series.push_back({{"n", rm.size()}, {"mean", rm.back()}});
        j["running_mean"] = series;
    }
    if (values.size() >= 30) {
        const auto h = analysis::hill_sweep(values);
        j["hill_tail_index"] = {{"n", values.size()}, {"top5", h.top5}, {"top10", h.top10}, {"top20", h.top20}};
    }
    const auto grid = analysis::log_grid(1.0, static_cast<double>(std::max<std::uint64_t>(p.horizon, 2)), 25);
    const auto surv = analysis::survival_function(values, grid);
    Json sf = Json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) sf.push_back({grid[i], surv[i]});
    j["survival_loglog"] = sf;
    return j;
}

inline Json run_exit_time_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    const auto samples = exit_time_samples(cfg.params, cfg.jobs);
    CsvWriter csv(dir / "exit_time.csv", {"replication", "phi_seed", "T", "censored"});
    for (std::size_t r = 0; r < samples.size(); ++r)
        csv.row(r, samples[r].phi_seed, samples[r].slots, samples[r].censored);
    return summarize_exit_times(samples, cfg.params);
}

// ---------------------------------------------------------------------------
// Velocity

struct TraceStats {
    double velocity = 0.0;
    double final_fifth_fluctuation = 0.0;
    double progress = 0.0;
    std::uint64_t plain_slots = 0;
    std::uint64_t enhanced_slots = 0;
    std::size_t coupling_violations = 0;
    bool sectors_disjoint = true;
    analysis::Interval bootstrap;
};

inline TraceStats trace_stats(const PacketTrace& t, const SimParams& p, StreamKey boot_key) {
    TraceStats s;
    if (t.distance.empty()) return s;
    const auto v = information_velocity(t);
    s.velocity = v.velocity;
    const std::size_t from = v.ratio.size() - std::max<std::size_t>(1, v.ratio.size() / 5);
    s.final_fifth_fluctuation =
        s.velocity > 0.0 ? analysis::relative_fluctuation(std::span<const double>(v.ratio).subspan(from))
                         : std::numeric_limits<double>::infinity();
    std::vector<double> prog, delay;
    for (const auto& h : t.hops) {
        prog.push_back(h.destination.x - h.source.x);
        const auto actual = h.enhanced_delay.value_or(h.delay);
        delay.push_back(static_cast<double>(actual));
        s.progress += prog.back();
        s.plain_slots += h.delay;
        s.enhanced_slots += actual;
        if (h.enhanced_delay && *h.enhanced_delay < h.delay) ++s.coupling_violations;
    }
    s.sectors_disjoint = sectors_disjoint(t, ConePartition(p.cones));
    if (!prog.empty()) s.bootstrap = analysis::bootstrap_ratio_ci(prog, delay, boot_key);
    return s;
}

inline Json trace_json(const PacketTrace& t, const TraceStats& s) {
    Json j;
    j["slots"] = t.total_slots();
    j["hops"] = t.hops.size();
    j["termination"] = to_string(t.reason);
    j["censored_hop"] = t.censored ? Json{{"index", t.censored->index}, {"slots", t.censored->slots}} : Json();
    j["velocity"] = s.velocity;
    j["progress_per_slot_bootstrap_ci95"] = {s.bootstrap.lo, s.bootstrap.hi};
    j["d_over_t_final_fifth_relative_fluctuation"] = s.final_fifth_fluctuation;
    j["sectors_disjoint"] = s.sectors_disjoint;
    if (!t.hops.empty() && t.hops.front().enhanced_delay) {
        j["virtual_points_added"] = t.virtual_points_added;
        j["plain_velocity"] = s.progress / static_cast<double>(std::max<std::uint64_t>(1, s.plain_slots));
        j["stationary_velocity"] = s.progress / static_cast<double>(std::max<std::uint64_t>(1, s.enhanced_slots));
        j["coupling_violations"] = s.coupling_violations;
    }
    return j;
}

inline std::string pad4(std::size_t r) {
    std::string idx = std::to_string(r);
    if (idx.size() < 4) idx.insert(0, 4 - idx.size(), '0');
    return idx;
}

inline std::string indexed_name(const char* stem, std::size_t r) { return std::string(stem) + "_" + pad4(r) + ".csv"; }

inline void write_trace_csv(const PacketTrace& t, const std::filesystem::path& dir, std::size_t r) {
    CsvWriter v(dir / indexed_name("velocity", r), {"slot", "d", "d_over_t"});
    for (std::size_t i = 0; i < t.distance.size(); ++i)
        v.row(i + 1, t.distance[i], t.distance[i] / static_cast<double>(i + 1));
    CsvWriter h(dir / indexed_name("hops", r), {"i", "R", "theta", "T", "T_prime"});
    for (const auto& hop : t.hops) {
        const std::string tp = hop.enhanced_delay ? format_number(*hop.enhanced_delay) : std::string();
        h.cells({format_number(static_cast<std::uint64_t>(hop.index)), format_number(hop.r), format_number(hop.theta),
                 format_number(hop.delay), tp});
    }
}

inline Json run_velocity_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    const SimParams& p = cfg.params;
    const auto traces = parallel_map(p.replications, cfg.jobs,
                                     [&](std::size_t r) { return run_tagged_packet(p, replication_key(p, r)); });
    Json reps = Json::array();
    std::vector<double> velocities;
    std::size_t dead_ends = 0;
    for (std::size_t r = 0; r < traces.size(); ++r) {
        write_trace_csv(traces[r], dir, r);
        const auto s = trace_stats(traces[r], p, StreamKey(p.seed).child(Purpose::bootstrap).child(r));
        reps.push_back(trace_json(traces[r], s));
        if (traces[r].reason == Termination::dead_end) {
            ++dead_ends;
            continue;
        }
        velocities.push_back(s.velocity);
    }
    Json j;
    j["replications"] = reps;
    j["dead_ends_excluded"] = dead_ends;
    if (!velocities.empty()) j["velocity"] = ci_json(analysis::mean_ci(velocities));
    j["mean_hop_progress"] = analysis::mean_hop_progress(p.lambda, p.cones);
    return j;
}

// ---------------------------------------------------------------------------
// Dispatch and sweeps

inline Json run_single(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    switch (cfg.kind == ExperimentKind::sweep ? cfg.sweep_kind : cfg.kind) {
        case ExperimentKind::velocity:
            return run_velocity_experiment(cfg, dir);
        case ExperimentKind::exit_time:
        case ExperimentKind::aloha_baseline:
            return run_exit_time_experiment(cfg, dir);
        default:
            throw ConfigError("experiment", "not a single-run experiment");
    }
}

/// Cartesian product of the grid axes, first axis varying slowest.
inline std::vector<std::vector<double>> grid_points(const ExperimentConfig& cfg) {
    std::vector<std::vector<double>> pts{{}};
    for (const auto& [name, values] : cfg.grid) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : pts) {
            for (double v : values) {
                auto row = prefix;
                row.push_back(v);
                next.push_back(std::move(row));
            }
        }
        pts = std::move(next);
    }
    return pts;
}

inline Json run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::vector<std::string>& warnings) {
    const auto points = grid_points(cfg);
    if (points.size() > cfg.grid_cap) throw ConfigError("grid", "grid exceeds the point cap");
    std::vector<std::string> header{"point"};
    for (const auto& [name, values] : cfg.grid) header.push_back(name);
    const bool velocity = cfg.sweep_kind == ExperimentKind::velocity;
    if (velocity) {
        for (const char* c : {"replications", "velocity", "ci_lo", "ci_hi", "dead_ends"}) header.push_back(c);
    } else {
        for (const char* c : {"n", "mean_T", "ci_lo", "ci_hi", "censored_fraction", "running_mean_final_half_change",
                              "hill_top10", "finiteness_condition"})
            header.push_back(c);
    }
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "sweep.csv", header);
    Json results = Json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        ExperimentConfig sub = cfg;
        sub.grid.clear();
        for (std::size_t a = 0; a < cfg.grid.size(); ++a) set_param(sub.params, cfg.grid[a].first, points[i][a]);
        sub.params.seed = StreamKey(cfg.params.seed).child(Purpose::sweep_point).child(i).value();
        try {
            sub.params.check();
        } catch (const ParameterError& e) {
            throw ConfigError("grid", "point " + std::to_string(i) + ": " + e.what());
        }
        for (auto& w : hypothesis_warnings(sub.params)) warnings.push_back("point " + std::to_string(i) + ": " + w);
        const auto point_dir = dir / ("point_" + pad4(i));
        Json summary = run_single(sub, point_dir);
        std::vector<std::string> row{format_number(static_cast<std::uint64_t>(i))};
        Json echo;
        for (std::size_t a = 0; a < cfg.grid.size(); ++a) {
            row.push_back(format_number(points[i][a]));
            echo[cfg.grid[a].first] = points[i][a];
        }
        auto num = [](const Json& v) { return v.is_number() ? format_number(v.get<double>()) : std::string(); };
        if (velocity) {
            const Json& v = summary.contains("velocity") ? summary["velocity"] : Json();
            row.push_back(format_number(sub.params.replications));
            row.push_back(v.is_null() ? "" : num(v["mean"]));
            row.push_back(v.is_null() ? "" : num(v["ci95"][0]));
            row.push_back(v.is_null() ? "" : num(v["ci95"][1]));
            row.push_back(num(summary["dead_ends_excluded"]));
        } else {
            const Json& t = summary["T"];
            row.push_back(num(summary["n"]));
            row.push_back(num(t["mean"]));
            row.push_back(num(t["ci95"][0]));
            row.push_back(num(t["ci95"][1]));
            row.push_back(num(summary["censored_fraction"]));
            row.push_back(summary.contains("running_mean_final_half_change")
                              ? num(summary["running_mean_final_half_change"])
                              : "");
            row.push_back(summary.contains("hill_tail_index") ? num(summary["hill_tail_index"]["top10"]) : "");
            row.push_back(sub.params.finiteness_condition() ? "true" : "false");
        }
        csv.cells(row);
        results.push_back({{"point", i}, {"grid", echo}, {"seed", sub.params.seed}, {"summary", summary}});
    }
    return {{"points", results}};
}

}  // namespace ivsim::cli
