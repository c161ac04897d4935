// Command-line front end: generate | run | report | all

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sinebench/sinebench.hpp"

namespace {

using namespace sinebench;

struct Overrides {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
    std::vector<std::size_t> n_values;
    std::vector<double> snr_db;
    std::vector<double> ratios;
    std::optional<std::size_t> draws;
    std::optional<std::size_t> context_length;
    std::optional<std::size_t> horizon;
    std::vector<std::string> models;
    std::vector<std::string> external;  // name=command
    std::string output_dir;
    std::optional<std::size_t> jobs;
    bool quiet = false;
};

void add_config_options(CLI::App& app, Overrides& o, bool with_roster) {
    app.add_option("-c,--config", o.config_file, "JSON configuration file; flags override its values")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--sets", o.sets, "sets to process (A, B)")->delimiter(',');
    app.add_option("--n", o.n_values, "override the N grid")->delimiter(',');
    app.add_option("--snr", o.snr_db, "override the SNR grid (dB)")->delimiter(',');
    app.add_option("--ratios", o.ratios, "override the sampling-ratio grid")->delimiter(',');
    app.add_option("--draws", o.draws, "amplitude/frequency draws per N");
    app.add_option("--context-length", o.context_length, "context length (default 512)");
    app.add_option("--horizon", o.horizon, "forecast horizon (default 64)");
    app.add_option("-o,--out", o.output_dir, "output directory");
    app.add_flag("-q,--quiet", o.quiet, "no progress output");
    if (with_roster) {
        app.add_option("--models", o.models, "built-in forecasters (fft, ar, naive)")->delimiter(',');
        app.add_option("--external", o.external, "external forecaster as name=command (repeatable)");
        app.add_option("-j,--jobs", o.jobs, "worker threads / bridge processes per external forecaster");
    }
}

RunConfig resolve(const Overrides& o) {
    RunConfig c;
    if (!o.config_file.empty()) c = load_config_file(o.config_file, c);
    if (o.seed) c.master_seed = *o.seed;
    if (!o.sets.empty()) {
        c.sets.clear();
        for (const auto& s : o.sets) {
            const auto label = parse_set_label(s);
            if (!label) throw ConfigError("unknown set '" + s + "'");
            c.sets.push_back(*label);
        }
    }
    if (!o.n_values.empty()) c.grid.n_values = o.n_values;
    if (!o.snr_db.empty()) c.grid.snr_db = o.snr_db;
    if (!o.ratios.empty()) c.grid.sampling_ratios = o.ratios;
    if (o.draws) c.grid.draws_per_cell = *o.draws;
    if (o.context_length) c.grid.context_length = *o.context_length;
    if (o.horizon) c.grid.horizon = *o.horizon;
    if (!o.models.empty()) c.models = o.models;
    if (!o.external.empty()) {
        c.external.clear();
        for (const auto& e : o.external) {
            const auto eq = e.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("--external expects name=command, got '" + e + "'");
            c.external.push_back({e.substr(0, eq), e.substr(eq + 1)});
        }
    }
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    if (o.jobs) c.jobs = *o.jobs;
    c.quiet = o.quiet;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark harness for forecasting noisy periodic synthetic series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Overrides gen_o, run_o, all_o;
    std::string results_file;
    std::string report_dir;
    bool report_quiet = false;

    auto* gen = app.add_subcommand("generate", "generate datasets A/B with manifest");
    add_config_options(*gen, gen_o, false);
    auto* run = app.add_subcommand("run", "run forecasters over the datasets and write results.csv");
    add_config_options(*run, run_o, true);
    auto* rep = app.add_subcommand("report", "summary tables, breakdowns and SVG plots from results.csv");
    rep->add_option("results", results_file, "results CSV")->required()->check(CLI::ExistingFile);
    rep->add_option("-o,--out", report_dir, "report directory (default: <results dir>/report)");
    rep->add_flag("-q,--quiet", report_quiet, "no warnings on stderr");
    auto* all = app.add_subcommand("all", "generate, run and report");
    add_config_options(*all, all_o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            const auto cfg = resolve(gen_o);
            const auto out = cmd_generate(cfg);
            for (const auto& s : out.sets) {
                fmt::print("set {}: {} series, sha256 {}\n", to_string(s.set), s.series, s.dataset_sha256);
            }
            return kExitOk;
        }
        if (*run) {
            const auto cfg = resolve(run_o);
            const auto out = cmd_run(cfg);
            for (const auto& f : out.protocol_failures) fmt::print(stderr, "protocol failure: {}\n", f);
            fmt::print("{} records ({} error rows) -> {}\n", out.records, out.error_rows, out.results_file.string());
            return out.exit_code;
        }
        if (*rep) {
            const fs::path results(results_file);
            const fs::path dir = report_dir.empty() ? results.parent_path() / "report" : fs::path(report_dir);
            const auto out = cmd_report(results, dir, report_quiet);
            fmt::print("{} records, {} malformed rows skipped, {} files -> {}\n", out.records, out.malformed,
                       out.files.size(), dir.string());
            return kExitOk;
        }
        if (*all) {
            const auto cfg = resolve(all_o);
            cfg.validate();
            cmd_generate(cfg);
            const auto out = cmd_run(cfg);
            for (const auto& f : out.protocol_failures) fmt::print(stderr, "protocol failure: {}\n", f);
            const auto rep_out = cmd_report(out.results_file, cfg.output_dir / "report", cfg.quiet);
            fmt::print("{} records -> {}; {} report files\n", out.records, out.results_file.string(), rep_out.files.size());
            return out.exit_code;
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const IoError& e) {
        fmt::print(stderr, "I/O error: {}\n", e.what());
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        fmt::print(stderr, "I/O error: {}\n", e.what());
        return kExitIo;
    } catch (const ProtocolError& e) {
        fmt::print(stderr, "protocol failure: {}\n", e.what());
        return kExitProtocol;
    }
    return kExitUsage;
}
