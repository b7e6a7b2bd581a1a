#pragma once

// Experiment configuration: a flat key = value text format whose keys match
// SimParams fields, plus orchestration keys and `grid.<key>` sweep axes.
// Later settings win, so callers apply defaults, then the file, then the
// command line.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ivsim/engine.hpp"

namespace ivsim::cli {

/// Bad configuration input. The message always names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class ExperimentKind { exit_time, velocity, aloha_baseline, validate, sweep };

inline const char* to_string(ExperimentKind k) noexcept {
    switch (k) {
        case ExperimentKind::exit_time: return "exit-time";
        case ExperimentKind::velocity: return "velocity";
        case ExperimentKind::aloha_baseline: return "aloha-baseline";
        case ExperimentKind::validate: return "validate";
        case ExperimentKind::sweep: return "sweep";
    }
    return "?";
}

inline std::optional<ExperimentKind> parse_kind(std::string_view s) {
    for (auto k : {ExperimentKind::exit_time, ExperimentKind::velocity, ExperimentKind::aloha_baseline,
                   ExperimentKind::validate, ExperimentKind::sweep})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

enum class ValidationScale { full, quick };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::exit_time;
    SimParams params;
    std::filesystem::path out_dir = "out";
    unsigned jobs = 1;
    bool seed_given = false;
    /// Sweep axes in first-mention order.
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    std::size_t grid_cap = 256;
    ExperimentKind sweep_kind = ExperimentKind::exit_time;
    ValidationScale scale = ValidationScale::full;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, std::string_view v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

inline int parse_int(const std::string& key, std::string_view v) {
    const auto u = parse_u64(key, v);
    if (u > 1'000'000) throw ConfigError(key, "value out of range");
    return static_cast<int>(u);
}

inline bool parse_bool(const std::string& key, std::string_view v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key, "expected true/false, got '" + std::string(v) + "'");
}

using Setter = std::function<void(SimParams&, const std::string&, std::string_view)>;

inline Setter real(double SimParams::*field) {
    return [field](SimParams& p, const std::string& k, std::string_view v) { p.*field = parse_double(k, v); };
}

inline const std::map<std::string, Setter, std::less<>>& param_setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"lambda", real(&SimParams::lambda)},
        {"alpha", real(&SimParams::alpha)},
        {"mu", real(&SimParams::mu)},
        {"beta", real(&SimParams::beta)},
        {"gamma", real(&SimParams::gamma)},
        {"noise", real(&SimParams::noise)},
        {"avg_power", real(&SimParams::avg_power)},
        {"epsilon", real(&SimParams::epsilon)},
        {"window_x", real(&SimParams::window_x)},
        {"window_y", real(&SimParams::window_y)},
        {"guard", real(&SimParams::guard)},
        {"aloha_prob", real(&SimParams::aloha_prob)},
        {"aloha_power", real(&SimParams::aloha_power)},
        {"interference_radius", real(&SimParams::interference_radius)},
        {"cones", [](SimParams& p, const std::string& k, std::string_view v) { p.cones = parse_int(k, v); }},
        {"horizon", [](SimParams& p, const std::string& k, std::string_view v) { p.horizon = parse_u64(k, v); }},
        {"replications",
         [](SimParams& p, const std::string& k, std::string_view v) { p.replications = parse_u64(k, v); }},
        {"seed", [](SimParams& p, const std::string& k, std::string_view v) { p.seed = parse_u64(k, v); }},
        {"stationary_mode",
         [](SimParams& p, const std::string& k, std::string_view v) { p.stationary_mode = parse_bool(k, v); }},
        {"policy",
         [](SimParams& p, const std::string& k, std::string_view v) {
             if (v == "power_control") p.policy = PolicyKind::power_control;
             else if (v == "aloha") p.policy = PolicyKind::aloha;
             else throw ConfigError(k, "expected power_control or aloha");
         }},
        {"cone_choice",
         [](SimParams& p, const std::string& k, std::string_view v) {
             if (v == "uniform_random") p.cone_choice = ConeChoiceModel::uniform_random;
             else if (v == "worst_case") p.cone_choice = ConeChoiceModel::worst_case;
             else throw ConfigError(k, "expected uniform_random or worst_case");
         }},
    };
    return table;
}

/// Grid axes may name these numeric parameters; beta_gamma sets beta = value / gamma.
inline bool sweepable(std::string_view key) {
    return key == "lambda" || key == "alpha" || key == "beta" || key == "gamma" || key == "cones" ||
           key == "epsilon" || key == "beta_gamma";
}

}  // namespace detail

/// Sets one sweep axis value on SimParams; beta_gamma sets beta = value / gamma.
inline void set_param(SimParams& p, const std::string& key, double value) {
    if (key == "lambda") p.lambda = value;
    else if (key == "alpha") p.alpha = value;
    else if (key == "beta") p.beta = value;
    else if (key == "gamma") p.gamma = value;
    else if (key == "epsilon") p.epsilon = value;
    else if (key == "beta_gamma") p.beta = value / p.gamma;
    else if (key == "cones") {
        p.cones = static_cast<int>(value);
        if (static_cast<double>(p.cones) != value) throw ConfigError("grid." + key, "expected an integer");
    } else {
        throw ConfigError("grid." + key, "not a sweepable parameter");
    }
}

/// Kind-specific defaults applied before any file or command-line setting.
/// A sweep takes the defaults of the experiment it repeats.
inline void apply_kind_defaults(ExperimentConfig& cfg) {
    SimParams& p = cfg.params;
    switch (cfg.kind == ExperimentKind::sweep ? cfg.sweep_kind : cfg.kind) {
        case ExperimentKind::velocity:
            p.window_x = 400.0;
            p.window_y = 400.0;
            p.horizon = 100'000;
            p.replications = 1;
            break;
        case ExperimentKind::aloha_baseline:
            p.policy = PolicyKind::aloha;
            break;
        default:
            break;
    }
}

/// Applies one key = value setting.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, std::string_view value) {
    if (key.rfind("grid.", 0) == 0) {
        const std::string axis = key.substr(5);
        if (!detail::sweepable(axis)) throw ConfigError(key, "not a sweepable parameter");
        std::vector<double> values;
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = detail::trim(rest.substr(0, comma));
            if (item.empty()) throw ConfigError(key, "empty grid value");
            values.push_back(detail::parse_double(key, item));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        if (values.empty()) throw ConfigError(key, "grid needs at least one value");
        for (auto& [name, vals] : cfg.grid) {
            if (name == axis) {
                vals = std::move(values);
                return;
            }
        }
        cfg.grid.emplace_back(axis, std::move(values));
        return;
    }
    if (key == "experiment") {
        const auto k = parse_kind(value);
        if (!k) throw ConfigError(key, "unknown experiment kind '" + std::string(value) + "'");
        cfg.kind = *k;
        return;
    }
    if (key == "sweep_kind") {
        const auto k = parse_kind(value);
        if (!k || *k == ExperimentKind::sweep || *k == ExperimentKind::validate)
            throw ConfigError(key, "expected exit-time, velocity or aloha-baseline");
        cfg.sweep_kind = *k;
        return;
    }
    if (key == "out") {
        cfg.out_dir = std::string(value);
        return;
    }
    if (key == "jobs") {
        const auto j = detail::parse_u64(key, value);
        if (j < 1 || j > 1024) throw ConfigError(key, "must lie in [1, 1024]");
        cfg.jobs = static_cast<unsigned>(j);
        return;
    }
    if (key == "grid_cap") {
        cfg.grid_cap = detail::parse_u64(key, value);
        return;
    }
    if (key == "scale") {
        if (value == "full") cfg.scale = ValidationScale::full;
        else if (value == "quick") cfg.scale = ValidationScale::quick;
        else throw ConfigError(key, "expected full or quick");
        return;
    }
    const auto& table = detail::param_setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown key");
    it->second(cfg.params, key, value);
    if (key == "seed") cfg.seed_given = true;
}

/// One `key = value` pair from a config file or a `--set` flag.
struct Setting {
    std::string key;
    std::string value;
};

inline Setting parse_assignment(std::string_view line) {
    const auto eq = line.find('=');
    const auto key = std::string(detail::trim(line.substr(0, eq)));
    if (eq == std::string_view::npos) throw ConfigError(key.empty() ? "?" : key, "expected key = value");
    if (key.empty()) throw ConfigError("?", "missing key before '='");
    return {key, std::string(detail::trim(line.substr(eq + 1)))};
}

/// Parses config text: one assignment per line, `#` starts a comment.
inline std::vector<Setting> parse_config_text(std::string_view text) {
    std::vector<Setting> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        line = line.substr(0, line.find('#'));
        line = detail::trim(line);
        if (!line.empty()) out.push_back(parse_assignment(line));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

inline std::vector<Setting> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Builds a config from settings in increasing precedence order. The
/// experiment kind is resolved first so its defaults sit underneath
/// everything else.
inline ExperimentConfig build_config(const std::vector<Setting>& settings) {
    ExperimentConfig cfg;
    bool radius_given = false;
    for (const auto& s : settings) {
        if (s.key == "experiment" || s.key == "sweep_kind") apply_setting(cfg, s.key, s.value);
        radius_given = radius_given || s.key == "interference_radius";
    }
    apply_kind_defaults(cfg);
    for (const auto& s : settings) apply_setting(cfg, s.key, s.value);
    const auto effective = cfg.kind == ExperimentKind::sweep ? cfg.sweep_kind : cfg.kind;
    // Traversal runs truncate interference at the guard distance unless told otherwise.
    if (effective == ExperimentKind::velocity && !radius_given) cfg.params.interference_radius = cfg.params.guard;
    if (!cfg.seed_given) throw ConfigError("seed", "required (no implicit seeding)");
    if (cfg.kind != ExperimentKind::validate) {
        try {
            cfg.params.check();
        } catch (const ParameterError& e) {
            throw ConfigError("params", e.what());
        }
    }
    std::size_t points = 1;
    for (const auto& [name, vals] : cfg.grid) {
        points *= vals.size();
        if (points > cfg.grid_cap)
            throw ConfigError("grid." + name, "grid exceeds the cap of " + std::to_string(cfg.grid_cap) + " points");
    }
    if (cfg.kind == ExperimentKind::sweep && cfg.grid.empty())
        throw ConfigError("grid", "sweep needs at least one grid.<axis> entry");
    if (!cfg.grid.empty() && cfg.kind != ExperimentKind::sweep)
        throw ConfigError("grid." + cfg.grid.front().first, "grid axes need experiment = sweep");
    return cfg;
}

}  // namespace ivsim::cli
