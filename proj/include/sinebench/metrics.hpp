#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "signal.hpp"

namespace sinebench {

struct ForecastMetrics {
    double mse = 0.0;
    double mae = 0.0;
    std::optional<double> mase;       // absent when the context has no one-step variation
    std::optional<double> r_squared;  // absent when the truth is constant
};

/// Mean of |x_t - x_{t-1}| over the context: the in-sample one-step naive error.
inline double naive_scale(std::span<const double> context) {
    if (context.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t t = 1; t < context.size(); ++t) s += std::abs(context[t] - context[t - 1]);
    return s / static_cast<double>(context.size() - 1);
}

inline ForecastMetrics compute_metrics(std::span<const double> truth, std::span<const double> forecast,
                                       std::span<const double> context) {
    if (truth.size() != forecast.size() || truth.empty()) {
        throw std::invalid_argument("compute_metrics: truth and forecast must be non-empty and equally long");
    }
    if (context.empty()) throw std::invalid_argument("compute_metrics: empty context");

    const auto n = static_cast<double>(truth.size());
    double sse = 0.0;
    double sae = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - forecast[i];
        sse += e * e;
        sae += std::abs(e);
    }
    ForecastMetrics m;
    m.mse = sse / n;
    m.mae = sae / n;

    const double scale = naive_scale(context);
    if (scale > 0.0) m.mase = m.mae / scale;

    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
    double sst = 0.0;
    for (double v : truth) sst += (v - mean) * (v - mean);
    if (sst > 0.0) m.r_squared = 1.0 - sse / sst;
    return m;
}

enum class Metric { Mse, Mae, Mase, RSquared };

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Mse, Metric::Mae, Metric::Mase, Metric::RSquared};

inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Mse: return "mse";
        case Metric::Mae: return "mae";
        case Metric::Mase: return "mase";
        case Metric::RSquared: return "r2";
    }
    return "?";
}

inline std::optional<double> metric_value(const ForecastMetrics& fm, Metric m) {
    switch (m) {
        case Metric::Mse: return fm.mse;
        case Metric::Mae: return fm.mae;
        case Metric::Mase: return fm.mase;
        case Metric::RSquared: return fm.r_squared;
    }
    return std::nullopt;
}

/// One (series, model) evaluation. `metrics` is absent for error rows.
struct ForecastRecord {
    std::string series_id;
    SetLabel set = SetLabel::A;
    std::string model_id;
    std::size_t n_components = 0;
    double snr_db = 0.0;
    double sampling_ratio = 0.0;
    std::vector<double> forecast;
    std::optional<ForecastMetrics> metrics;
    std::string error;

    bool ok() const noexcept { return metrics.has_value(); }
};

// --- order statistics -------------------------------------------------------

/// Linear interpolation between order statistics (R type 7). `sorted` must be ascending.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

struct BoxplotStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;  // ascending
    std::size_t count = 0;
};

/// Tukey boxplot: whiskers reach the most extreme points inside [q1 - 1.5 IQR, q3 + 1.5 IQR].
inline BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("boxplot_stats: empty input");
    std::sort(values.begin(), values.end());
    BoxplotStats b;
    b.count = values.size();
    b.q1 = quantile_sorted(values, 0.25);
    b.median = quantile_sorted(values, 0.5);
    b.q3 = quantile_sorted(values, 0.75);
    const double iqr = b.q3 - b.q1;
    const double fence_low = b.q1 - 1.5 * iqr;
    const double fence_high = b.q3 + 1.5 * iqr;
    b.whisker_low = b.q1;
    b.whisker_high = b.q3;
    bool low_set = false;
    for (double v : values) {
        if (v < fence_low || v > fence_high) {
            b.outliers.push_back(v);
            continue;
        }
        if (!low_set) {
            b.whisker_low = v;
            low_set = true;
        }
        b.whisker_high = v;
    }
    return b;
}

/// Average ranks (1-based), ties share their mean rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Spearman rank correlation; NaN when either side is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = mean(rx);
    const double my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

// --- grouping ---------------------------------------------------------------

enum class GroupKey { Set, Model, N, Snr, Ratio };

inline std::string_view to_string(GroupKey k) {
    switch (k) {
        case GroupKey::Set: return "set";
        case GroupKey::Model: return "model";
        case GroupKey::N: return "N";
        case GroupKey::Snr: return "snr_db";
        case GroupKey::Ratio: return "sampling_ratio";
    }
    return "?";
}

enum class Statistic { Mean, Median };

inline std::string_view to_string(Statistic s) { return s == Statistic::Mean ? "mean" : "median"; }

/// A key component: numeric keys order numerically, text keys lexically.
struct KeyValue {
    double number = 0.0;
    std::string text;

    friend bool operator<(const KeyValue& a, const KeyValue& b) {
        if (a.number != b.number) return a.number < b.number;
        return a.text < b.text;
    }
    friend bool operator==(const KeyValue& a, const KeyValue& b) = default;
};

struct MetricAggregate {
    std::optional<double> value;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

struct SummaryRow {
    std::vector<KeyValue> key;
    std::array<MetricAggregate, kAllMetrics.size()> metrics;

    const MetricAggregate& operator[](Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

struct SummaryTable {
    std::vector<GroupKey> keys;
    Statistic statistic = Statistic::Mean;
    std::vector<SummaryRow> rows;  // sorted by key
};

/// Shortest decimal that round-trips, e.g. 2.1 -> "2.1", 20 -> "20".
inline std::string format_number_key(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline KeyValue key_of(const ForecastRecord& r, GroupKey k) {
    switch (k) {
        case GroupKey::Set: return {0.0, std::string(to_string(r.set))};
        case GroupKey::Model: return {0.0, r.model_id};
        case GroupKey::N: return {static_cast<double>(r.n_components), format_number_key(static_cast<double>(r.n_components))};
        case GroupKey::Snr: return {r.snr_db, format_number_key(r.snr_db)};
        case GroupKey::Ratio: return {r.sampling_ratio, format_number_key(r.sampling_ratio)};
    }
    return {};
}

/// One row per distinct key with the statistic of each metric over its records.
/// Undefined metric values (and error rows) are excluded and counted.
inline SummaryTable aggregate(std::span<const ForecastRecord> records, std::vector<GroupKey> keys,
                              Statistic statistic) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    std::map<std::vector<KeyValue>, std::array<std::vector<double>, kAllMetrics.size()>> groups;
    std::map<std::vector<KeyValue>, std::array<std::size_t, kAllMetrics.size()>> excluded;
    for (const auto& r : records) {
        std::vector<KeyValue> key;
        key.reserve(keys.size());
        for (auto k : keys) key.push_back(key_of(r, k));
        auto& bucket = groups[key];
        auto& skip = excluded[key];
        for (std::size_t mi = 0; mi < kAllMetrics.size(); ++mi) {
            std::optional<double> v;
            if (r.metrics) v = metric_value(*r.metrics, kAllMetrics[mi]);
            if (v && std::isfinite(*v)) {
                bucket[mi].push_back(*v);
            } else {
                ++skip[mi];
            }
        }
    }
    SummaryTable table;
    table.keys = std::move(keys);
    table.statistic = statistic;
    for (auto& [key, bucket] : groups) {
        SummaryRow row;
        row.key = key;
        for (std::size_t mi = 0; mi < kAllMetrics.size(); ++mi) {
            auto& agg = row.metrics[mi];
            agg.used = bucket[mi].size();
            agg.excluded = excluded[key][mi];
            if (bucket[mi].empty()) continue;
            agg.value = statistic == Statistic::Mean ? mean(bucket[mi]) : median(std::move(bucket[mi]));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace sinebench
