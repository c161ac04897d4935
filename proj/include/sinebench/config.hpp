#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "forecaster.hpp"
#include "io.hpp"
#include "signal.hpp"

namespace sinebench {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct ExternalForecasterSpec {
    std::string name;
    std::string command;
};

struct RunConfig {
    std::uint64_t master_seed = 20240917;
    std::vector<SetLabel> sets{SetLabel::A, SetLabel::B};
    GridConfig grid;
    std::vector<std::string> models{"fft", "ar"};
    std::vector<ExternalForecasterSpec> external;
    std::filesystem::path output_dir = "sinebench-out";
    std::size_t jobs = 1;
    BuiltinOptions builtin;
    std::chrono::milliseconds bridge_timeout = std::chrono::minutes(5);
    bool quiet = false;

    void validate() const;
};

/// True when the first word of `command` is an executable path or is found on PATH.
inline bool command_launchable(const std::string& command) {
    std::istringstream words(command);
    std::string program;
    if (!(words >> program)) return false;
    if (program.find('/') != std::string::npos) return ::access(program.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (path == nullptr) return false;
    std::string_view rest(path);
    while (!rest.empty()) {
        const auto colon = rest.find(':');
        const auto dir = rest.substr(0, colon);
        const auto candidate = std::filesystem::path(dir.empty() ? "." : std::string(dir)) / program;
        if (::access(candidate.c_str(), X_OK) == 0) return true;
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
    }
    return false;
}

inline void RunConfig::validate() const {
    grid.validate();
    if (sets.empty()) throw ConfigError("config: no sets selected");
    if (jobs == 0) throw ConfigError("config: jobs must be >= 1");
    if (models.empty() && external.empty()) throw ConfigError("config: empty forecaster roster");
    std::set<std::string> names;
    for (const auto& m : models) {
        if (!make_builtin(m, builtin)) throw ConfigError("config: unknown built-in forecaster '" + m + "'");
        if (!names.insert(m).second) throw ConfigError("config: duplicate forecaster '" + m + "'");
    }
    for (const auto& e : external) {
        if (e.name.empty() || e.name.find(',') != std::string::npos) {
            throw ConfigError("config: external forecaster needs a name without commas");
        }
        if (!names.insert(e.name).second) throw ConfigError("config: duplicate forecaster '" + e.name + "'");
        if (!command_launchable(e.command)) {
            throw ConfigError("config: external forecaster '" + e.name + "' has no launchable command: " + e.command);
        }
    }
    if (!(builtin.fft_threshold > 0.0 && builtin.fft_threshold < 1.0)) {
        throw ConfigError("config: fft_threshold must lie in (0, 1)");
    }
    if (builtin.ar_max_order == 0) throw ConfigError("config: ar_max_order must be positive");
}

inline nlohmann::json grid_to_json(const GridConfig& g) {
    return {{"n_values", g.n_values},
            {"draws_per_cell", g.draws_per_cell},
            {"snr_db", g.snr_db},
            {"sampling_ratios", g.sampling_ratios},
            {"context_length", g.context_length},
            {"horizon", g.horizon},
            {"draw",
             {{"amplitude_min", g.draw.amplitude_min},
              {"amplitude_max", g.draw.amplitude_max},
              {"harmonic_f1_max", g.draw.harmonic_f1_max},
              {"rational_num_max", g.draw.rational_num_max},
              {"rational_den_max", g.draw.rational_den_max}}}};
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json sets = nlohmann::json::array();
    for (auto s : c.sets) sets.push_back(std::string(to_string(s)));
    nlohmann::json external = nlohmann::json::array();
    for (const auto& e : c.external) external.push_back({{"name", e.name}, {"command", e.command}});
    return {{"master_seed", c.master_seed},
            {"sets", sets},
            {"grid", grid_to_json(c.grid)},
            {"models", c.models},
            {"external", external},
            {"output_dir", c.output_dir.string()},
            {"jobs", c.jobs},
            {"fft_threshold", c.builtin.fft_threshold},
            {"ar_max_order", c.builtin.ar_max_order},
            {"bridge_timeout_ms", c.bridge_timeout.count()}};
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || item.key() == k;
        if (!ok) throw ConfigError("config: unknown key '" + item.key() + "' in " + std::string(where));
    }
}

}  // namespace detail

inline GridConfig grid_from_json(const nlohmann::json& j, GridConfig g = {}) {
    if (!j.is_object()) throw ConfigError("config: grid must be an object");
    detail::reject_unknown(j, {"n_values", "draws_per_cell", "snr_db", "sampling_ratios", "context_length", "horizon", "draw"},
                           "grid");
    detail::read_field(j, "n_values", g.n_values);
    detail::read_field(j, "draws_per_cell", g.draws_per_cell);
    detail::read_field(j, "snr_db", g.snr_db);
    detail::read_field(j, "sampling_ratios", g.sampling_ratios);
    detail::read_field(j, "context_length", g.context_length);
    detail::read_field(j, "horizon", g.horizon);
    if (j.contains("draw")) {
        const auto& d = j["draw"];
        detail::reject_unknown(d, {"amplitude_min", "amplitude_max", "harmonic_f1_max", "rational_num_max", "rational_den_max"},
                               "grid.draw");
        detail::read_field(d, "amplitude_min", g.draw.amplitude_min);
        detail::read_field(d, "amplitude_max", g.draw.amplitude_max);
        detail::read_field(d, "harmonic_f1_max", g.draw.harmonic_f1_max);
        detail::read_field(d, "rational_num_max", g.draw.rational_num_max);
        detail::read_field(d, "rational_den_max", g.draw.rational_den_max);
    }
    return g;
}

/// Applies the keys present in `j` on top of `base`.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    detail::reject_unknown(j, {"master_seed", "sets", "grid", "models", "external", "output_dir", "jobs", "fft_threshold",
                               "ar_max_order", "bridge_timeout_ms"},
                           "config");
    detail::read_field(j, "master_seed", base.master_seed);
    if (j.contains("sets")) {
        std::vector<std::string> labels;
        detail::read_field(j, "sets", labels);
        base.sets.clear();
        for (const auto& l : labels) {
            const auto s = parse_set_label(l);
            if (!s) throw ConfigError("config: unknown set '" + l + "'");
            base.sets.push_back(*s);
        }
    }
    if (j.contains("grid")) base.grid = grid_from_json(j["grid"], base.grid);
    detail::read_field(j, "models", base.models);
    if (j.contains("external")) {
        base.external.clear();
        for (const auto& e : j["external"]) {
            ExternalForecasterSpec spec;
            detail::read_field(e, "name", spec.name);
            detail::read_field(e, "command", spec.command);
            base.external.push_back(spec);
        }
    }
    if (j.contains("output_dir")) {
        std::string dir;
        detail::read_field(j, "output_dir", dir);
        base.output_dir = dir;
    }
    detail::read_field(j, "jobs", base.jobs);
    detail::read_field(j, "fft_threshold", base.builtin.fft_threshold);
    detail::read_field(j, "ar_max_order", base.builtin.ar_max_order);
    if (j.contains("bridge_timeout_ms")) {
        long long ms = 0;
        detail::read_field(j, "bridge_timeout_ms", ms);
        base.bridge_timeout = std::chrono::milliseconds(ms);
    }
    return base;
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace sinebench
