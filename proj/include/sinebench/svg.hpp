#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "metrics.hpp"

// Minimal static SVG charts. Output is a pure function of the inputs: fixed
// canvas, fixed palette, fixed-precision coordinates.

namespace sinebench::svg {

inline constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline std::string_view color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

inline std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

/// Maps data values to pixel rows, linear or log10.
class ValueAxis {
public:
    ValueAxis(double lo, double hi, bool log_scale, double top_px, double bottom_px)
        : log_(log_scale), top_(top_px), bottom_(bottom_px) {
        if (log_) {
            lo = std::max(lo, 1e-300);
            hi = std::max(hi, lo);
            lo_ = std::floor(std::log10(lo));
            hi_ = std::ceil(std::log10(hi));
        } else {
            const double pad = hi > lo ? 0.05 * (hi - lo) : (lo == 0.0 ? 1.0 : 0.05 * std::abs(lo));
            lo_ = lo - pad;
            hi_ = hi + pad;
        }
        if (hi_ <= lo_) hi_ = lo_ + 1.0;
    }

    double pixel(double v) const {
        const double t = log_ ? std::log10(std::max(v, 1e-300)) : v;
        const double clamped = std::clamp(t, lo_, hi_);
        return bottom_ - (clamped - lo_) / (hi_ - lo_) * (bottom_ - top_);
    }

    bool contains(double v) const {
        if (log_ && v <= 0.0) return false;
        const double t = log_ ? std::log10(v) : v;
        return t >= lo_ && t <= hi_;
    }

    /// Tick values in data units.
    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log_) {
            const int step = std::max(1, static_cast<int>(std::ceil((hi_ - lo_) / 8.0)));
            for (int e = static_cast<int>(lo_); e <= static_cast<int>(hi_); e += step) out.push_back(std::pow(10.0, e));
            return out;
        }
        const double raw = (hi_ - lo_) / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0}) {
            if (m * mag >= raw) {
                step = m * mag;
                break;
            }
        }
        for (double v = std::ceil(lo_ / step) * step; v <= hi_ + 1e-12 * step; v += step) {
            out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
        }
        return out;
    }

    static std::string label(double v) { return fmt::format("{:.4g}", v); }

private:
    bool log_;
    double top_;
    double bottom_;
    double lo_ = 0.0;
    double hi_ = 1.0;
};

struct Canvas {
    double width = 720;
    double height = 440;
    double left = 80;
    double right = 170;
    double top = 50;
    double bottom = 70;

    double plot_left() const { return left; }
    double plot_right() const { return width - right; }
    double plot_top() const { return top; }
    double plot_bottom() const { return height - bottom; }
};

namespace detail {

inline void open_document(std::string& out, const Canvas& c, std::string_view title) {
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        c.width, c.height);
    out += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", c.width, c.height);
    out += fmt::format("<text x=\"{:.1f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                       (c.plot_left() + c.plot_right()) / 2.0, escape(title));
}

inline void value_axis(std::string& out, const Canvas& c, const ValueAxis& axis, std::string_view label) {
    out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                       c.plot_left(), c.plot_top(), c.plot_bottom());
    for (double t : axis.ticks()) {
        const double y = axis.pixel(t);
        out += fmt::format(
            "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#dddddd\"/>\n"
            "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n",
            c.plot_left(), y, c.plot_right(), y, c.plot_left() - 6, y + 4, ValueAxis::label(t));
    }
    const double mid = (c.plot_top() + c.plot_bottom()) / 2.0;
    out += fmt::format("<text x=\"18\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.1f})\">{1}</text>\n",
                       mid, escape(label));
}

inline void category_axis(std::string& out, const Canvas& c, const std::vector<std::string>& categories,
                          std::string_view label) {
    out += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n",
                       c.plot_left(), c.plot_bottom(), c.plot_right(), c.plot_bottom());
    const double slot = (c.plot_right() - c.plot_left()) / static_cast<double>(std::max<std::size_t>(1, categories.size()));
    for (std::size_t i = 0; i < categories.size(); ++i) {
        const double x = c.plot_left() + slot * (static_cast<double>(i) + 0.5);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x,
                           c.plot_bottom() + 18, escape(categories[i]));
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                       (c.plot_left() + c.plot_right()) / 2.0, c.plot_bottom() + 44, escape(label));
}

inline double category_x(const Canvas& c, std::size_t count, std::size_t i) {
    const double slot = (c.plot_right() - c.plot_left()) / static_cast<double>(std::max<std::size_t>(1, count));
    return c.plot_left() + slot * (static_cast<double>(i) + 0.5);
}

inline void legend(std::string& out, const Canvas& c, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = c.plot_top() + 10 + 20.0 * static_cast<double>(i);
        out += fmt::format(
            "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"14\" height=\"10\" fill=\"{}\"/>\n"
            "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
            c.plot_right() + 16, y - 9, color(i), c.plot_right() + 36, y, escape(names[i]));
    }
}

}  // namespace detail

struct LineSeries {
    std::string name;
    std::vector<std::optional<double>> values;  // one per category
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> categories;
    std::vector<LineSeries> series;
    bool log_y = false;
};

inline std::string render(const LineChart& chart, const Canvas& canvas = {}) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : chart.series) {
        for (const auto& v : s.values) {
            if (!v || !std::isfinite(*v) || (chart.log_y && *v <= 0.0)) continue;
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
    }
    if (!std::isfinite(lo)) {
        lo = chart.log_y ? 1.0 : 0.0;
        hi = chart.log_y ? 10.0 : 1.0;
    }
    const ValueAxis axis(lo, hi, chart.log_y, canvas.plot_top(), canvas.plot_bottom());

    std::string out;
    detail::open_document(out, canvas, chart.title);
    detail::value_axis(out, canvas, axis, chart.y_label);
    detail::category_axis(out, canvas, chart.categories, chart.x_label);
    for (std::size_t si = 0; si < chart.series.size(); ++si) {
        const auto& s = chart.series[si];
        std::string points;
        for (std::size_t i = 0; i < s.values.size() && i < chart.categories.size(); ++i) {
            const auto& v = s.values[i];
            if (!v || !std::isfinite(*v) || (chart.log_y && *v <= 0.0)) continue;
            const double x = detail::category_x(canvas, chart.categories.size(), i);
            const double y = axis.pixel(*v);
            points += fmt::format("{}{:.1f},{:.1f}", points.empty() ? "" : " ", x, y);
            out += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n", x, y, color(si));
        }
        if (!points.empty()) {
            out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", points,
                               color(si));
        }
    }
    std::vector<std::string> names;
    for (const auto& s : chart.series) names.push_back(s.name);
    detail::legend(out, canvas, names);
    out += "</svg>\n";
    return out;
}

struct Box {
    std::string label;
    BoxplotStats stats;
};

struct BoxChart {
    std::string title;
    std::string y_label;
    std::vector<Box> boxes;
    bool log_y = false;
    /// Axis limits; values outside are drawn as clipped markers at the edge.
    std::optional<double> y_min;
    std::optional<double> y_max;
};

inline std::string render(const BoxChart& chart, const Canvas& canvas = {}) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    auto take = [&](double v) {
        if (!std::isfinite(v) || (chart.log_y && v <= 0.0)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (const auto& b : chart.boxes) {
        take(b.stats.whisker_low);
        take(b.stats.whisker_high);
        take(b.stats.q1);
        take(b.stats.q3);
        for (double o : b.stats.outliers) take(o);
    }
    if (!std::isfinite(lo)) {
        lo = chart.log_y ? 1.0 : 0.0;
        hi = chart.log_y ? 10.0 : 1.0;
    }
    if (chart.y_min) lo = std::max(lo, *chart.y_min);
    if (chart.y_max) hi = std::min(hi, *chart.y_max);
    if (hi < lo) hi = lo;
    const ValueAxis axis(lo, hi, chart.log_y, canvas.plot_top(), canvas.plot_bottom());

    std::vector<std::string> labels;
    for (const auto& b : chart.boxes) labels.push_back(b.label);

    std::string out;
    detail::open_document(out, canvas, chart.title);
    detail::value_axis(out, canvas, axis, chart.y_label);
    detail::category_axis(out, canvas, labels, "");
    const double slot = (canvas.plot_right() - canvas.plot_left()) / static_cast<double>(std::max<std::size_t>(1, labels.size()));
    const double half = std::min(30.0, slot * 0.3);
    for (std::size_t i = 0; i < chart.boxes.size(); ++i) {
        const auto& s = chart.boxes[i].stats;
        const double x = detail::category_x(canvas, labels.size(), i);
        const double yq1 = axis.pixel(s.q1);
        const double yq3 = axis.pixel(s.q3);
        const double ymed = axis.pixel(s.median);
        const double ylo = axis.pixel(s.whisker_low);
        const double yhi = axis.pixel(s.whisker_high);
        out += fmt::format(
            "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n"
            "<line x1=\"{0:.1f}\" y1=\"{3:.1f}\" x2=\"{0:.1f}\" y2=\"{4:.1f}\" stroke=\"black\"/>\n",
            x, yq3, yhi, yq1, ylo);
        out += fmt::format(
            "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n"
            "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n",
            x - half / 2, yhi, x + half / 2, yhi, x - half / 2, ylo, x + half / 2, ylo);
        out += fmt::format(
            "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\" fill-opacity=\"0.35\" "
            "stroke=\"{}\"/>\n",
            x - half, std::min(yq1, yq3), 2 * half, std::abs(yq1 - yq3), color(i), color(i));
        out += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                           x - half, ymed, x + half, ymed);
        std::size_t clipped = 0;
        for (double o : s.outliers) {
            if (!axis.contains(o)) {
                ++clipped;
                continue;
            }
            out += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2\" fill=\"none\" stroke=\"{}\"/>\n", x,
                               axis.pixel(o), color(i));
        }
        if (clipped > 0) {
            out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">+{} off-scale</text>\n",
                               x, canvas.plot_top() - 6, clipped);
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace sinebench::svg
