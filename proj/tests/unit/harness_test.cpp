#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "sinebench/sinebench.hpp"

using namespace sinebench;
namespace fs = std::filesystem;

namespace {

const std::string kFakeBridge = SINEBENCH_FAKE_BRIDGE;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sinebench_harness_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config(const std::string& name) {
    RunConfig c;
    c.sets = {SetLabel::A};
    c.grid.n_values = {1, 3};
    c.grid.draws_per_cell = 2;
    c.grid.snr_db = {5, 30};
    c.grid.sampling_ratios = {2.5, 10};
    c.output_dir = scratch(name);
    c.quiet = true;
    c.bridge_timeout = std::chrono::seconds(20);
    return c;
}

/// Returns a fixed-length forecast regardless of the horizon.
class FixedLengthForecaster final : public Forecaster {
public:
    explicit FixedLengthForecaster(std::size_t n) : n_(n) {}
    std::string id() const override { return "fixed"; }
    std::vector<double> forecast(std::span<const double>, std::size_t, double) override {
        return std::vector<double>(n_, 0.0);
    }

private:
    std::size_t n_;
};

class ThrowingForecaster final : public Forecaster {
public:
    std::string id() const override { return "thrower"; }
    std::vector<double> forecast(std::span<const double>, std::size_t, double) override {
        throw ForecastError("model exploded");
    }
};

EvalSeries one_series() {
    GridConfig g;
    g.n_values = {2};
    g.draws_per_cell = 1;
    g.snr_db = {10};
    g.sampling_ratios = {3};
    return to_eval_series(generate_dataset(SetLabel::A, 1, g).front());
}

}  // namespace

TEST(Evaluate, WrongHorizonLengthIsAnErrorRow) {
    FixedLengthForecaster f(63);
    const auto r = evaluate(f, one_series());
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.error, "wrong horizon length");
}

TEST(Evaluate, ForecasterExceptionIsAnErrorRow) {
    ThrowingForecaster f;
    const auto r = evaluate(f, one_series());
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.error, "model exploded");
}

TEST(Evaluate, FftOnNoiselessSingleToneAtRatioTwenty) {
    SignalSpec spec;
    spec.components = {{2.0, Rational(3), 0.0}};
    spec.sampling_ratio = 20;
    spec.snr_db = std::numeric_limits<double>::infinity();
    const auto s = sample_signal(spec);
    const auto f = forecast_fft(s.context(), 64);
    double err = 0, pw = 0;
    for (std::size_t k = 0; k < 64; ++k) {
        err += (f[k] - s.truth()[k]) * (f[k] - s.truth()[k]);
        pw += s.truth()[k] * s.truth()[k];
    }
    EXPECT_LT(err / pw, 0.05);
}

TEST(Generate, GridOverrideCountsAndIdempotence) {
    auto c = small_config("gen");
    c.sets = {SetLabel::A, SetLabel::B};
    c.grid.n_values = {1};
    c.grid.snr_db = {30};
    c.grid.sampling_ratios = {20};
    const auto first = cmd_generate(c);
    ASSERT_EQ(first.sets.size(), 2u);
    for (const auto& s : first.sets) EXPECT_EQ(s.series, 2u);
    const auto second = cmd_generate(c);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(first.sets[i].dataset_sha256, second.sets[i].dataset_sha256);
    const auto manifest = nlohmann::json::parse(slurp(first.manifest));
    EXPECT_EQ(manifest["master_seed"].get<std::uint64_t>(), c.master_seed);
    EXPECT_EQ(manifest["sets"]["A"]["sha256"], first.sets[0].dataset_sha256);
}

TEST(Generate, UnwritableDirectoryIsIoError) {
    auto c = small_config("unwritable");
    c.output_dir = "/proc/definitely/not/here";
    EXPECT_THROW(cmd_generate(c), IoError);
}

TEST(Run, RecordCompletenessAndOrder) {
    auto c = small_config("complete");
    c.models = {"fft", "ar", "naive"};
    const auto out = cmd_run(c);
    EXPECT_EQ(out.exit_code, kExitOk);
    const std::size_t series = c.grid.series_count();
    EXPECT_EQ(out.records, 3 * series);
    const auto file = read_results_csv(out.results_file);
    EXPECT_EQ(file.malformed, 0u);
    ASSERT_EQ(file.records.size(), 3 * series);
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        const auto& r = file.records[i];
        EXPECT_TRUE(r.ok()) << r.error;
        EXPECT_EQ(r.model_id, c.models[i % 3]);
        EXPECT_TRUE(seen.emplace(r.series_id, r.model_id).second);
    }
}

TEST(Run, DeterministicAcrossJobCounts) {
    auto a = small_config("det1");
    auto b = small_config("det2");
    b.jobs = 3;
    const auto ra = cmd_run(a);
    const auto rb = cmd_run(b);
    EXPECT_EQ(slurp(ra.results_file), slurp(rb.results_file));
}

TEST(Run, LoadsGeneratedDatasetWhenManifestMatches) {
    auto c = small_config("load");
    cmd_generate(c);
    const auto generated = cmd_run(c);
    const auto manifest = nlohmann::json::parse(slurp(generated.manifest));
    EXPECT_EQ(manifest["datasets"]["A"]["source"], "file");
    auto fresh = small_config("load_fresh");
    const auto in_memory = cmd_run(fresh);
    EXPECT_EQ(nlohmann::json::parse(slurp(in_memory.manifest))["datasets"]["A"]["source"], "generated");
    EXPECT_EQ(slurp(generated.results_file), slurp(in_memory.results_file));
}

TEST(Run, BridgedNaiveMatchesInProcessNaive) {
    auto c = small_config("bridge_equiv");
    c.grid.n_values = {1, 2, 3, 5, 8};
    c.grid.draws_per_cell = 5;
    c.grid.snr_db = {2, 30};
    c.grid.sampling_ratios = {2.1, 20};
    ASSERT_EQ(c.grid.series_count(), 100u);
    c.models = {"naive"};
    c.external = {{"bridged", kFakeBridge}};
    const auto out = cmd_run(c);
    EXPECT_EQ(out.exit_code, kExitOk);
    const auto file = read_results_csv(out.results_file);
    ASSERT_EQ(file.records.size(), 200u);
    for (std::size_t i = 0; i < file.records.size(); i += 2) {
        const auto& local = file.records[i];
        const auto& remote = file.records[i + 1];
        ASSERT_EQ(remote.model_id, "bridged");
        ASSERT_TRUE(local.ok() && remote.ok()) << remote.error;
        EXPECT_NEAR(remote.metrics->mse, local.metrics->mse, 1e-12 * local.metrics->mse);
        EXPECT_NEAR(remote.metrics->mae, local.metrics->mae, 1e-12 * local.metrics->mae);
    }
    const auto manifest = nlohmann::json::parse(slurp(out.manifest));
    EXPECT_EQ(manifest["forecasters"][1]["version"], "fake-naive 1.0");
}

TEST(Run, BridgeErrorRepliesBecomeErrorRows) {
    auto c = small_config("bridge_errors");
    c.models = {"fft"};
    c.external = {{"flaky", kFakeBridge + " --error-every 4"}};
    const auto out = cmd_run(c);
    EXPECT_EQ(out.exit_code, kExitOk);
    const auto file = read_results_csv(out.results_file);
    std::size_t flaky_errors = 0;
    for (const auto& r : file.records) {
        if (r.model_id == "fft") EXPECT_TRUE(r.ok());
        if (r.model_id == "flaky" && !r.ok()) {
            EXPECT_EQ(r.error, "injected failure");
            ++flaky_errors;
        }
    }
    EXPECT_EQ(flaky_errors, c.grid.series_count() / 4);
}

TEST(Run, ShortBridgeRepliesAreWrongHorizonRows) {
    auto c = small_config("bridge_short");
    c.models = {};
    c.external = {{"short", kFakeBridge + " --short 1"}};
    const auto out = cmd_run(c);
    EXPECT_EQ(out.exit_code, kExitOk);
    for (const auto& r : read_results_csv(out.results_file).records) EXPECT_EQ(r.error, "wrong horizon length");
}

namespace {

void expect_cancelled_after_fault(const std::string& name, const std::string& flags, std::size_t good_before) {
    auto c = small_config(name);
    c.models = {"ar"};
    c.external = {{"broken", kFakeBridge + " " + flags}};
    const auto builtin_only = [&] {
        auto d = small_config(name + "_ref");
        d.models = {"ar"};
        return read_results_csv(cmd_run(d).results_file).records;
    }();
    const auto out = cmd_run(c);
    EXPECT_EQ(out.exit_code, kExitProtocol);
    ASSERT_EQ(out.protocol_failures.size(), 1u);
    const auto file = read_results_csv(out.results_file);
    ASSERT_EQ(file.records.size(), 2 * c.grid.series_count());
    std::size_t broken_ok = 0, protocol_rows = 0, cancelled_rows = 0;
    for (std::size_t i = 0; i < file.records.size(); ++i) {
        const auto& r = file.records[i];
        if (r.model_id == "ar") {
            // Crash isolation: the built-in rows are unchanged.
            const auto& ref = builtin_only[i / 2];
            ASSERT_TRUE(r.ok());
            EXPECT_EQ(r.metrics->mse, ref.metrics->mse);
            continue;
        }
        if (r.ok()) ++broken_ok;
        else if (r.error.rfind("protocol failure: ", 0) == 0) ++protocol_rows;
        else if (r.error.rfind("cancelled after protocol failure: ", 0) == 0) ++cancelled_rows;
    }
    EXPECT_EQ(broken_ok, good_before);
    EXPECT_EQ(protocol_rows, 1u);
    EXPECT_EQ(cancelled_rows, c.grid.series_count() - good_before - 1);
}

}  // namespace

TEST(Run, GarbageReplyCancelsThatForecaster) { expect_cancelled_after_fault("garbage", "--garbage-at 3", 2); }

TEST(Run, BridgeExitCancelsThatForecaster) { expect_cancelled_after_fault("exit", "--exit-at 5", 4); }

TEST(Run, MismatchedReplyIdCancelsThatForecaster) { expect_cancelled_after_fault("wrong_id", "--wrong-id-at 1", 0); }

TEST(Run, MissingHelloCancelsThatForecaster) { expect_cancelled_after_fault("no_hello", "--no-hello", 0); }

TEST(Config, RejectsUnknownAndUnlaunchable) {
    RunConfig c;
    c.models = {"fft", "mystery"};
    EXPECT_THROW(c.validate(), ConfigError);
    c.models = {"fft", "fft"};
    EXPECT_THROW(c.validate(), ConfigError);
    c.models = {"fft"};
    c.external = {{"ext", "/nonexistent/program --flag"}};
    EXPECT_THROW(c.validate(), ConfigError);
    c.external = {{"ext", kFakeBridge}};
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
    RunConfig c;
    c.master_seed = 77;
    c.grid.n_values = {2, 4};
    c.grid.snr_db = {3.5};
    c.models = {"ar"};
    const auto j = config_to_json(c);
    const auto back = config_from_json(j);
    EXPECT_EQ(back.master_seed, 77u);
    EXPECT_EQ(back.grid.n_values, c.grid.n_values);
    EXPECT_EQ(back.grid.snr_db, c.grid.snr_db);
    EXPECT_EQ(back.models, c.models);
    EXPECT_EQ(config_to_json(back), j);
    auto bad = j;
    bad["colour"] = "blue";
    EXPECT_THROW(config_from_json(bad), ConfigError);
}

TEST(Bridge, MessageEncodingRoundTrips) {
    const std::vector<double> ctx{0.1, -2.5e-300, 1.0 / 3.0, 12345.678};
    const auto m = parse_bridge_message(encode_forecast_request("r9", ctx, 7, 0.125));
    EXPECT_EQ(m.type, BridgeMessageType::Forecast);
    EXPECT_EQ(m.id, "r9");
    EXPECT_EQ(m.context, ctx);
    EXPECT_EQ(m.horizon, 7u);
    EXPECT_EQ(m.sample_interval, 0.125);
    const auto r = parse_bridge_message(encode_forecast_result("r9", ctx));
    EXPECT_EQ(r.type, BridgeMessageType::ForecastResult);
    EXPECT_EQ(r.values, ctx);
    const auto e = parse_bridge_message(encode_error("r1", "horizon must be >= 1"));
    EXPECT_EQ(e.reason, "horizon must be >= 1");
    EXPECT_EQ(parse_bridge_message(encode_hello("x", "2")).version, "2");
    EXPECT_EQ(parse_bridge_message(encode_shutdown()).type, BridgeMessageType::Shutdown);
}

TEST(Bridge, ProtocolErrors) {
    EXPECT_THROW(parse_bridge_message("not json"), ProtocolError);
    EXPECT_THROW(parse_bridge_message(R"({"type":"dance"})"), ProtocolError);
    EXPECT_THROW(parse_bridge_message(R"({"id":"r1"})"), ProtocolError);
    EXPECT_THROW(parse_bridge_message(R"({"type":"forecast_result","id":"r1","values":["a"]})"), ProtocolError);
    EXPECT_THROW(parse_bridge_message(R"({"type":"forecast","id":"r1","context":[1]})"), ProtocolError);
}

TEST(Bridge, NaiveAdapterExamples) {
    BridgeForecaster f("naive", kFakeBridge, std::chrono::seconds(20));
    const std::vector<double> ctx{1, 2, 3};
    EXPECT_EQ(f.forecast(ctx, 2, 1.0), (std::vector<double>{3, 3}));
    EXPECT_THROW(f.forecast(ctx, 0, 1.0), ForecastError);
    EXPECT_EQ(f.forecast(ctx, 1, 1.0), (std::vector<double>{3}));
    f.shutdown();
}
