#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "bridge.hpp"
#include "config.hpp"
#include "forecaster.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "signal.hpp"

namespace sinebench {

namespace fs = std::filesystem;

inline fs::path dataset_path(const fs::path& dir, SetLabel s) { return dir / fmt::format("dataset_{}.csv", to_string(s)); }
inline fs::path draws_path(const fs::path& dir, SetLabel s) { return dir / fmt::format("draws_{}.csv", to_string(s)); }
inline fs::path dataset_manifest_path(const fs::path& dir) { return dir / "dataset_manifest.json"; }
inline fs::path results_path(const fs::path& dir) { return dir / "results.csv"; }
inline fs::path run_manifest_path(const fs::path& dir) { return dir / "run_manifest.json"; }

namespace detail {

inline void log(const RunConfig& c, const std::string& line) {
    if (!c.quiet) fmt::print(stderr, "{}\n", line);
}

inline void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json rng_description() {
    return {{"generator", "counter-based SplitMix64: word i of stream k is mix64(k ^ mix64(i))"},
            {"splitting",
             "key = fold(mix64(master), path) with fold(h, p) = mix64(h ^ mix64(p + 0x632be59bd9b4e019)); "
             "components path = [0xC0, set(A=0,B=1), n_index, draw]; noise path = [0x40, set, n_index, draw, "
             "snr_index, ratio_index]"},
            {"normal", "Box-Muller, cosine variate first, sine variate cached"},
            {"uniform_int", "lo + ((u64 * span) >> 64)"}};
}

}  // namespace detail

// --- generate ---------------------------------------------------------------

struct GeneratedSet {
    SetLabel set = SetLabel::A;
    fs::path dataset_file;
    fs::path draws_file;
    std::string dataset_sha256;
    std::string draws_sha256;
    std::size_t series = 0;
};

struct GenerateOutcome {
    std::vector<GeneratedSet> sets;
    fs::path manifest;
    double seconds = 0.0;
};

inline std::vector<EvalSeries> to_eval(std::span<const LabeledSeries> data) {
    std::vector<EvalSeries> out;
    out.reserve(data.size());
    for (const auto& ls : data) out.push_back(to_eval_series(ls));
    return out;
}

/// Writes dataset_<set>.csv, draws_<set>.csv and dataset_manifest.json. Idempotent for a fixed config.
inline GenerateOutcome cmd_generate(const RunConfig& config) {
    config.grid.validate();
    const auto start = std::chrono::steady_clock::now();
    ensure_directory(config.output_dir);
    GenerateOutcome outcome;
    nlohmann::json sets = nlohmann::json::object();
    for (auto set : config.sets) {
        const auto data = generate_dataset(set, config.master_seed, config.grid);
        GeneratedSet g;
        g.set = set;
        g.series = data.size();
        g.dataset_file = dataset_path(config.output_dir, set);
        g.draws_file = draws_path(config.output_dir, set);
        g.dataset_sha256 = write_dataset_csv(g.dataset_file, to_eval(data));
        g.draws_sha256 = write_draws_csv(g.draws_file, data);
        detail::log(config, fmt::format("generated set {}: {} series -> {}", to_string(set), g.series, g.dataset_file.string()));
        sets[std::string(to_string(set))] = {{"dataset_file", g.dataset_file.filename().string()},
                                             {"sha256", g.dataset_sha256},
                                             {"draws_file", g.draws_file.filename().string()},
                                             {"draws_sha256", g.draws_sha256},
                                             {"series", g.series},
                                             {"observations_per_series", config.grid.series_length()}};
        outcome.sets.push_back(std::move(g));
    }
    const nlohmann::json manifest = {{"tool", "sinebench"},
                                     {"tool_version", std::string(kToolVersion)},
                                     {"master_seed", config.master_seed},
                                     {"grid", grid_to_json(config.grid)},
                                     {"rng", detail::rng_description()},
                                     {"noise", "white Gaussian per observation, sigma^2 = sum(A_n^2 / 2) / 10^(snr_db / 10)"},
                                     {"sets", sets}};
    outcome.manifest = dataset_manifest_path(config.output_dir);
    detail::write_text(outcome.manifest, manifest.dump(2) + "\n");
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

/// Loads the set from disk when the directory's manifest matches this config and the
/// file hash checks out; otherwise generates it in memory.
inline std::vector<EvalSeries> obtain_dataset(const RunConfig& config, SetLabel set, std::string& content_hash,
                                              bool& loaded) {
    loaded = false;
    const auto manifest_file = dataset_manifest_path(config.output_dir);
    const auto data_file = dataset_path(config.output_dir, set);
    if (fs::exists(manifest_file) && fs::exists(data_file)) {
        nlohmann::json m;
        try {
            std::ifstream in(manifest_file);
            in >> m;
        } catch (const nlohmann::json::exception&) {
            m = nullptr;
        }
        const auto key = std::string(to_string(set));
        if (m.is_object() && m.value("master_seed", std::uint64_t{0}) == config.master_seed &&
            m.contains("grid") && m["grid"] == grid_to_json(config.grid) && m.contains("sets") && m["sets"].contains(key)) {
            const auto expected = m["sets"][key].value("sha256", std::string());
            if (!expected.empty() && sha256_file(data_file) == expected) {
                loaded = true;
                content_hash = expected;
                return read_dataset_csv(data_file, config.grid.context_length);
            }
        }
    }
    auto data = to_eval(generate_dataset(set, config.master_seed, config.grid));
    content_hash = dataset_content_hash(data);
    return data;
}

// --- run --------------------------------------------------------------------

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitProtocol = 3 };

struct RunOutcome {
    int exit_code = kExitOk;
    fs::path results_file;
    fs::path manifest;
    std::size_t records = 0;
    std::size_t error_rows = 0;
    std::vector<std::string> protocol_failures;
    std::vector<ForecastRecord> summary;  // records without forecast vectors, file order
};

/// Evaluates one forecaster on one series; never throws ForecastError.
inline ForecastRecord evaluate(Forecaster& forecaster, const EvalSeries& s) {
    ForecastRecord r;
    r.series_id = s.id;
    r.set = s.set;
    r.model_id = forecaster.id();
    r.n_components = s.n_components;
    r.snr_db = s.snr_db;
    r.sampling_ratio = s.sampling_ratio;
    const auto context = s.series.context();
    const auto truth = s.series.truth();
    try {
        r.forecast = forecaster.forecast(context, truth.size(), s.series.sample_interval);
    } catch (const ForecastError& e) {
        r.error = e.what();
        return r;
    } catch (const std::invalid_argument& e) {
        r.error = e.what();
        return r;
    } catch (const std::domain_error& e) {
        r.error = e.what();
        return r;
    }
    if (r.forecast.size() != truth.size()) {
        r.error = "wrong horizon length";
        return r;
    }
    for (double v : r.forecast) {
        if (!std::isfinite(v)) {
            r.error = "non-finite forecast";
            return r;
        }
    }
    r.metrics = compute_metrics(truth, r.forecast, context);
    return r;
}

/// Runs every roster entry over every series of the selected sets and streams
/// results.csv in (series, roster) order. External forecasters get one bridge process
/// per worker thread. A protocol failure cancels that forecaster's remaining work.
inline RunOutcome cmd_run(const RunConfig& config) {
    config.validate();
    const auto wall_start = std::chrono::steady_clock::now();
    ensure_directory(config.output_dir);

    std::vector<EvalSeries> series;
    nlohmann::json dataset_info = nlohmann::json::object();
    for (auto set : config.sets) {
        std::string hash;
        bool loaded = false;
        const auto t0 = std::chrono::steady_clock::now();
        auto data = obtain_dataset(config, set, hash, loaded);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        detail::log(config, fmt::format("set {}: {} series ({})", to_string(set), data.size(),
                                        loaded ? "loaded from disk" : "generated in memory"));
        dataset_info[std::string(to_string(set))] = {
            {"sha256", hash}, {"series", data.size()}, {"source", loaded ? "file" : "generated"}, {"seconds", secs}};
        std::move(data.begin(), data.end(), std::back_inserter(series));
    }

    // Roster: built-ins first, then externals, in configuration order.
    std::vector<std::string> roster = config.models;
    for (const auto& e : config.external) roster.push_back(e.name);
    const std::size_t builtin_count = config.models.size();
    std::vector<std::unique_ptr<Forecaster>> builtins;
    for (const auto& m : config.models) builtins.push_back(make_builtin(m, config.builtin));

    const std::size_t models = roster.size();
    const std::size_t total = series.size() * models;

    std::vector<std::atomic<bool>> cancelled(models);
    std::vector<std::string> cancel_reason(models);
    std::vector<std::string> versions(models);
    std::vector<double> model_seconds(models, 0.0);
    for (std::size_t m = 0; m < builtin_count; ++m) versions[m] = builtins[m]->version();

    std::mutex mutex;
    std::condition_variable ready;
    std::vector<std::optional<ForecastRecord>> slots(total);
    std::atomic<std::size_t> next{0};

    auto cancelled_record = [&](std::size_t s, std::size_t m, const std::string& reason) {
        ForecastRecord r;
        const auto& es = series[s];
        r.series_id = es.id;
        r.set = es.set;
        r.model_id = roster[m];
        r.n_components = es.n_components;
        r.snr_db = es.snr_db;
        r.sampling_ratio = es.sampling_ratio;
        r.error = reason;
        return r;
    };

    auto worker = [&]() {
        std::vector<std::unique_ptr<BridgeForecaster>> bridges(models - builtin_count);
        std::vector<double> local_seconds(models, 0.0);
        while (true) {
            const std::size_t item = next.fetch_add(1);
            if (item >= total) break;
            const std::size_t s = item / models;
            const std::size_t m = item % models;
            ForecastRecord record;
            const auto t0 = std::chrono::steady_clock::now();
            if (cancelled[m].load()) {
                std::lock_guard lock(mutex);
                record = cancelled_record(s, m, "cancelled after protocol failure: " + cancel_reason[m]);
            } else if (m < builtin_count) {
                record = evaluate(*builtins[m], series[s]);
            } else {
                auto& bridge = bridges[m - builtin_count];
                try {
                    if (!bridge) {
                        const auto& spec = config.external[m - builtin_count];
                        bridge = std::make_unique<BridgeForecaster>(spec.name, spec.command, config.bridge_timeout);
                        std::lock_guard lock(mutex);
                        versions[m] = bridge->version();
                    }
                    record = evaluate(*bridge, series[s]);
                } catch (const ProtocolError& e) {
                    bridge.reset();
                    std::lock_guard lock(mutex);
                    if (!cancelled[m].exchange(true)) cancel_reason[m] = e.what();
                    record = cancelled_record(s, m, std::string("protocol failure: ") + e.what());
                }
            }
            local_seconds[m] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            {
                std::lock_guard lock(mutex);
                slots[item] = std::move(record);
            }
            ready.notify_one();
        }
        std::lock_guard lock(mutex);
        for (std::size_t m = 0; m < models; ++m) model_seconds[m] += local_seconds[m];
    };

    RunOutcome outcome;
    outcome.results_file = results_path(config.output_dir);
    HashingWriter writer(outcome.results_file);
    writer.buffer().append(kResultsHeader);
    writer.buffer().push_back('\n');

    {
        std::vector<std::jthread> pool;
        const std::size_t threads = std::min<std::size_t>(config.jobs, std::max<std::size_t>(1, total));
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);

        std::size_t progress_mark = 0;
        for (std::size_t item = 0; item < total; ++item) {
            ForecastRecord record;
            {
                std::unique_lock lock(mutex);
                ready.wait(lock, [&] { return slots[item].has_value(); });
                record = std::move(*slots[item]);
                slots[item].reset();
            }
            writer.buffer().append(format_result_row(record));
            writer.maybe_flush();
            if (!record.ok()) ++outcome.error_rows;
            record.forecast.clear();
            record.forecast.shrink_to_fit();
            outcome.summary.push_back(std::move(record));
            if (!config.quiet && (item + 1) * 10 / std::max<std::size_t>(1, total) > progress_mark) {
                progress_mark = (item + 1) * 10 / total;
                detail::log(config, fmt::format("  {}/{} records", item + 1, total));
            }
        }
    }
    const auto results_hash = writer.finish();
    outcome.records = total;

    nlohmann::json forecasters = nlohmann::json::array();
    for (std::size_t m = 0; m < models; ++m) {
        forecasters.push_back({{"name", roster[m]},
                               {"kind", m < builtin_count ? "builtin" : "external"},
                               {"version", versions[m]},
                               {"seconds", model_seconds[m]},
                               {"cancelled", cancelled[m].load()},
                               {"cancel_reason", cancel_reason[m]}});
        if (cancelled[m].load()) outcome.protocol_failures.push_back(roster[m] + ": " + cancel_reason[m]);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    const nlohmann::json manifest = {{"tool", "sinebench"},
                                     {"tool_version", std::string(kToolVersion)},
                                     {"config", config_to_json(config)},
                                     {"datasets", dataset_info},
                                     {"forecasters", forecasters},
                                     {"results_file", outcome.results_file.filename().string()},
                                     {"results_sha256", results_hash},
                                     {"records", total},
                                     {"error_rows", outcome.error_rows},
                                     {"wall_seconds", wall}};
    outcome.manifest = run_manifest_path(config.output_dir);
    detail::write_text(outcome.manifest, manifest.dump(2) + "\n");
    if (!outcome.protocol_failures.empty()) outcome.exit_code = kExitProtocol;
    detail::log(config, fmt::format("run: {} records, {} error rows, {:.1f} s -> {}", total, outcome.error_rows, wall,
                                    outcome.results_file.string()));
    return outcome;
}

}  // namespace sinebench
