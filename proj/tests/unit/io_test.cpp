#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "sinebench/io.hpp"

using namespace sinebench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sinebench_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<LabeledSeries> small_set(SetLabel set) {
    GridConfig grid;
    grid.n_values = {1, 3};
    grid.draws_per_cell = 2;
    grid.snr_db = {2, 30};
    grid.sampling_ratios = {2.1, 20};
    return generate_dataset(set, 99, grid);
}

}  // namespace

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(NumberText, ShortestRoundTrip) {
    for (double v : {0.1, 2.1, -1e-300, 123456789.123456789, 5e-324, 1.0 / 3.0}) {
        std::string s;
        append_double(s, v);
        const auto back = parse_double(s);
        ASSERT_TRUE(back);
        EXPECT_EQ(*back, v) << s;
    }
    std::string s;
    append_double(s, 20.0);
    EXPECT_EQ(s, "20");
    EXPECT_FALSE(parse_double("1.5x"));
    EXPECT_FALSE(parse_double(""));
    EXPECT_FALSE(parse_unsigned("-3"));
}

TEST(DatasetCsv, RoundTripIsExact) {
    const auto data = small_set(SetLabel::B);
    std::vector<EvalSeries> eval;
    for (const auto& ls : data) eval.push_back(to_eval_series(ls));
    const auto path = scratch("dataset_B.csv");
    const auto hash = write_dataset_csv(path, eval);
    EXPECT_EQ(hash, sha256_file(path));
    EXPECT_EQ(hash, dataset_content_hash(eval));

    const auto back = read_dataset_csv(path, 512);
    ASSERT_EQ(back.size(), eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) {
        EXPECT_EQ(back[i].id, eval[i].id);
        EXPECT_EQ(back[i].set, eval[i].set);
        EXPECT_EQ(back[i].n_components, eval[i].n_components);
        EXPECT_EQ(back[i].draw_index, eval[i].draw_index);
        EXPECT_EQ(back[i].snr_db, eval[i].snr_db);
        EXPECT_EQ(back[i].sampling_ratio, eval[i].sampling_ratio);
        EXPECT_EQ(back[i].series.sample_interval, eval[i].series.sample_interval);
        EXPECT_EQ(back[i].series.values, eval[i].series.values);
        EXPECT_EQ(back[i].series.context_length, 512u);
        EXPECT_EQ(back[i].series.horizon, 64u);
    }
    // Rewriting what was read gives the same bytes.
    const auto again = scratch("dataset_B_again.csv");
    EXPECT_EQ(write_dataset_csv(again, back), hash);
    EXPECT_EQ(slurp(path), slurp(again));
}

TEST(DatasetCsv, RejectsCorruptFiles) {
    const auto path = scratch("bad.csv");
    {
        std::ofstream out(path);
        out << "wrong,header\n";
    }
    EXPECT_THROW(read_dataset_csv(path, 512), IoError);
    {
        std::ofstream out(path);
        out << kDatasetHeader << "\nA-00000,A,1,0,2,2.1,0.1,1,0.5\n";
    }
    EXPECT_THROW(read_dataset_csv(path, 512), IoError);
    {
        std::ofstream out(path);
        out << kDatasetHeader << "\nA-00000,A,1,0,2,2.1,0.1,0,zero\n";
    }
    EXPECT_THROW(read_dataset_csv(path, 512), IoError);
    {
        std::ofstream out(path);
        out << kDatasetHeader << "\nA-00000,A,1,0,2,2.1,0.1,0,0.5\n";
    }
    EXPECT_THROW(read_dataset_csv(path, 512), IoError);  // shorter than the context
    EXPECT_THROW(read_dataset_csv(scratch("missing.csv"), 512), IoError);
}

TEST(DrawsCsv, OneRowPerComponentWithBothPeriods) {
    const auto data = small_set(SetLabel::B);
    const auto path = scratch("draws_B.csv");
    write_draws_csv(path, data);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kDrawsHeader);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    EXPECT_EQ(rows, 2u * (1 + 3));  // two draws for each of N = 1 and N = 3
}

TEST(ResultsCsv, RoundTripAndMalformedRows) {
    ForecastRecord ok;
    ok.series_id = "A-00001";
    ok.set = SetLabel::A;
    ok.model_id = "ar";
    ok.n_components = 3;
    ok.snr_db = 15;
    ok.sampling_ratio = 2.5;
    ok.metrics = ForecastMetrics{0.25, 0.5, std::nullopt, 0.75};
    ForecastRecord err = ok;
    err.series_id = "A-00002";
    err.metrics.reset();
    err.error = "wrong horizon length, really";

    const auto path = scratch("results.csv");
    {
        std::ofstream out(path);
        out << kResultsHeader << '\n'
            << format_result_row(ok) << format_result_row(err) << "garbage\n"
            << "A-00003,C,ar,1,2,2.1,1,1,1,1,\n"
            << "A-00004,A,ar,1,2,2.1,,,,,\n"
            << "A-00005,A,ar,1,2,2.1,x,1,1,1,\n";
    }
    const auto r = read_results_csv(path);
    EXPECT_EQ(r.malformed, 4u);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].series_id, "A-00001");
    ASSERT_TRUE(r.records[0].metrics);
    EXPECT_EQ(r.records[0].metrics->mse, 0.25);
    EXPECT_FALSE(r.records[0].metrics->mase);
    EXPECT_EQ(*r.records[0].metrics->r_squared, 0.75);
    EXPECT_FALSE(r.records[1].ok());
    EXPECT_EQ(r.records[1].error, "wrong horizon length  really");
}
