#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "harness.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "svg.hpp"

namespace sinebench {

/// Spearman correlation of a group statistic against one grid factor.
struct TrendRow {
    SetLabel set = SetLabel::A;
    std::string model;
    GroupKey factor = GroupKey::Snr;
    Statistic statistic = Statistic::Median;
    Metric metric = Metric::Mse;
    double spearman = 0.0;
};

struct ReportOutcome {
    std::size_t records = 0;
    std::size_t malformed = 0;
    SummaryTable table_mean;    // keyed (set, model)
    SummaryTable table_median;  // keyed (set, model)
    std::vector<TrendRow> trends;
    std::vector<fs::path> files;
};

namespace detail {

inline std::string cell(const std::optional<double>& v) {
    if (!v) return "";
    std::string s;
    append_double(s, *v);
    return s;
}

inline std::vector<std::string> models_in(std::span<const ForecastRecord> records) {
    std::vector<std::string> out;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.model_id) == out.end()) out.push_back(r.model_id);
    }
    return out;
}

inline std::string factor_file_tag(GroupKey k) {
    switch (k) {
        case GroupKey::N: return "N";
        case GroupKey::Snr: return "snr";
        case GroupKey::Ratio: return "ratio";
        default: return std::string(to_string(k));
    }
}

inline std::string factor_title(GroupKey k) {
    switch (k) {
        case GroupKey::N: return "number of components N";
        case GroupKey::Snr: return "SNR (dB)";
        case GroupKey::Ratio: return "sampling ratio f*/f_max";
        default: return std::string(to_string(k));
    }
}

inline std::string metric_title(Metric m) {
    switch (m) {
        case Metric::Mse: return "MSE";
        case Metric::Mae: return "MAE";
        case Metric::Mase: return "MASE";
        case Metric::RSquared: return "R-squared";
    }
    return "";
}

/// Markdown table shaped like the mean/median MSE comparison: one row per
/// (set, statistic), one column per model, best value in bold.
inline std::string table_markdown(const SummaryTable& mean_t, const SummaryTable& median_t,
                                  const std::vector<std::string>& models, const std::vector<SetLabel>& sets) {
    std::string out = "|";
    for (const auto& m : models) out += " " + m + " |";
    out = "| |" + out.substr(1) + "\n|---|";
    for (std::size_t i = 0; i < models.size(); ++i) out += "---:|";
    out += "\n";
    for (auto set : sets) {
        for (const auto* table : {&mean_t, &median_t}) {
            std::vector<std::optional<double>> vals;
            for (const auto& m : models) {
                std::optional<double> v;
                for (const auto& row : table->rows) {
                    if (row.key[0].text == to_string(set) && row.key[1].text == m) v = row[Metric::Mse].value;
                }
                vals.push_back(v);
            }
            std::optional<double> best;
            for (const auto& v : vals) {
                if (v && (!best || *v < *best)) best = v;
            }
            out += fmt::format("| set {}, {} |", to_string(set), to_string(table->statistic));
            for (const auto& v : vals) {
                if (!v) {
                    out += " |";
                } else if (best && *v == *best) {
                    out += fmt::format(" **{:.2f}** |", *v);
                } else {
                    out += fmt::format(" {:.2f} |", *v);
                }
            }
            out += "\n";
        }
    }
    return out;
}

}  // namespace detail

/// Turns a results file into summary tables, breakdown and boxplot CSV + SVG files.
/// Output depends only on the results file content.
inline ReportOutcome cmd_report(const fs::path& results_file, const fs::path& out_dir, bool quiet = false) {
    auto parsed = read_results_csv(results_file);
    ensure_directory(out_dir);
    ReportOutcome outcome;
    outcome.records = parsed.records.size();
    outcome.malformed = parsed.malformed;
    if (parsed.malformed > 0 && !quiet) {
        fmt::print(stderr, "warning: skipped {} malformed result rows\n", parsed.malformed);
    }
    if (parsed.records.empty()) throw IoError("no usable rows in " + results_file.string());
    const auto& records = parsed.records;
    const auto models = detail::models_in(records);
    std::vector<SetLabel> sets;
    for (auto s : {SetLabel::A, SetLabel::B}) {
        if (std::any_of(records.begin(), records.end(), [&](const ForecastRecord& r) { return r.set == s; })) sets.push_back(s);
    }

    auto emit = [&](const fs::path& name, const std::string& text) {
        const auto path = out_dir / name;
        detail::write_text(path, text);
        outcome.files.push_back(path);
    };

    // (a) mean / median per (set, model)
    outcome.table_mean = aggregate(records, {GroupKey::Set, GroupKey::Model}, Statistic::Mean);
    outcome.table_median = aggregate(records, {GroupKey::Set, GroupKey::Model}, Statistic::Median);
    {
        std::string csv = "set,model,statistic,mse,mae,mase,r2,records,mse_excluded,mase_excluded,r2_excluded\n";
        for (const auto* t : {&outcome.table_mean, &outcome.table_median}) {
            for (const auto& row : t->rows) {
                csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", row.key[0].text, row.key[1].text,
                                   to_string(t->statistic), detail::cell(row[Metric::Mse].value),
                                   detail::cell(row[Metric::Mae].value), detail::cell(row[Metric::Mase].value),
                                   detail::cell(row[Metric::RSquared].value),
                                   row[Metric::Mse].used + row[Metric::Mse].excluded, row[Metric::Mse].excluded,
                                   row[Metric::Mase].excluded, row[Metric::RSquared].excluded);
            }
        }
        emit("summary_table.csv", csv);
        emit("summary_table.md", detail::table_markdown(outcome.table_mean, outcome.table_median, models, sets));
    }

    // (b) breakdowns by N / SNR / ratio, line per model
    std::string trends_csv = "set,model,factor,statistic,metric,spearman\n";
    for (auto set : sets) {
        std::vector<ForecastRecord> subset;
        for (const auto& r : records) {
            if (r.set == set) subset.push_back(r);
        }
        for (auto factor : {GroupKey::N, GroupKey::Snr, GroupKey::Ratio}) {
            for (auto stat : {Statistic::Mean, Statistic::Median}) {
                const auto table = aggregate(subset, {factor, GroupKey::Model}, stat);
                std::vector<KeyValue> levels;
                for (const auto& row : table.rows) {
                    if (levels.empty() || !(levels.back() == row.key[0])) levels.push_back(row.key[0]);
                }
                for (auto metric : {Metric::Mse, Metric::Mae}) {
                    const std::string stem = fmt::format("breakdown_{}_{}_{}_by_{}", to_string(set), to_string(stat),
                                                         to_string(metric), detail::factor_file_tag(factor));
                    std::string csv = fmt::format("{},model,{},used,excluded\n", to_string(factor), to_string(metric));
                    svg::LineChart chart;
                    chart.title = fmt::format("Set {}: {} {} by {}", to_string(set), to_string(stat),
                                              detail::metric_title(metric), detail::factor_title(factor));
                    chart.x_label = detail::factor_title(factor);
                    chart.y_label = fmt::format("{} {}", to_string(stat), detail::metric_title(metric));
                    for (const auto& l : levels) chart.categories.push_back(l.text);
                    for (const auto& model : models) {
                        svg::LineSeries line{model, {}};
                        std::vector<double> xs, ys;
                        for (const auto& level : levels) {
                            std::optional<double> v;
                            for (const auto& row : table.rows) {
                                if (row.key[0] == level && row.key[1].text == model) {
                                    v = row[metric].value;
                                    csv += fmt::format("{},{},{},{},{}\n", level.text, model, detail::cell(v),
                                                       row[metric].used, row[metric].excluded);
                                }
                            }
                            line.values.push_back(v);
                            if (v) {
                                xs.push_back(level.number);
                                ys.push_back(*v);
                            }
                        }
                        if (xs.size() >= 2) {
                            const double rho = spearman(xs, ys);
                            trends_csv += fmt::format("{},{},{},{},{},{}\n", to_string(set), model, to_string(factor),
                                                      to_string(stat), to_string(metric), detail::cell(rho));
                            outcome.trends.push_back({set, model, factor, stat, metric, rho});
                        }
                        chart.series.push_back(std::move(line));
                    }
                    emit(stem + ".csv", csv);
                    emit(stem + ".svg", svg::render(chart));
                }
            }
        }
    }
    emit("trends.csv", trends_csv);

    // (c) boxplots per set and metric, box per model
    for (auto set : sets) {
        for (auto metric : kAllMetrics) {
            svg::BoxChart chart;
            chart.title = fmt::format("Set {}: {} per model", to_string(set), detail::metric_title(metric));
            chart.y_label = detail::metric_title(metric) + (metric == Metric::RSquared ? "" : " (log scale)");
            chart.log_y = metric != Metric::RSquared;
            std::string csv = "model,count,q1,median,q3,whisker_low,whisker_high,outlier_count,outliers\n";
            double lowest_whisker = 1.0;
            for (const auto& model : models) {
                std::vector<double> values;
                for (const auto& r : records) {
                    if (r.set != set || r.model_id != model || !r.metrics) continue;
                    const auto v = metric_value(*r.metrics, metric);
                    if (v && std::isfinite(*v)) values.push_back(*v);
                }
                if (values.empty()) {
                    csv += model + ",0,,,,,,0,\n";
                    continue;
                }
                auto stats = boxplot_stats(std::move(values));
                std::string outliers;
                for (std::size_t i = 0; i < stats.outliers.size(); ++i) {
                    if (i) outliers.push_back(' ');
                    append_double(outliers, stats.outliers[i]);
                }
                csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", model, stats.count, detail::cell(stats.q1),
                                   detail::cell(stats.median), detail::cell(stats.q3), detail::cell(stats.whisker_low),
                                   detail::cell(stats.whisker_high), stats.outliers.size(), outliers);
                lowest_whisker = std::min(lowest_whisker, stats.whisker_low);
                chart.boxes.push_back({model, std::move(stats)});
            }
            if (metric == Metric::RSquared) {
                chart.y_max = 1.0;
                chart.y_min = lowest_whisker;
            }
            const std::string stem = fmt::format("boxplot_{}_{}", to_string(set), to_string(metric));
            emit(stem + ".csv", csv);
            emit(stem + ".svg", svg::render(chart));
        }
    }
    return outcome;
}

}  // namespace sinebench
