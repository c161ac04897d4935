#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "metrics.hpp"
#include "signal.hpp"

namespace sinebench {

/// File-system failure; carries the offending path in its message.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incremental SHA-256 over OpenSSL EVP.
class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256: init failed");
        }
    }

    void update(std::string_view bytes) { EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size()); }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(kHex[digest[i] >> 4]);
            out.push_back(kHex[digest[i] & 0xf]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes);
    return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
    }
    return h.hex();
}

/// Shortest decimal form that parses back to the same double.
inline void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void append_unsigned(std::string& out, std::uint64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
}

/// Writes through a buffer and hashes exactly the bytes written.
class HashingWriter {
public:
    explicit HashingWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot write " + path.string());
        buffer_.reserve(kFlushAt + 4096);
    }

    std::string& buffer() { return buffer_; }

    void maybe_flush() {
        if (buffer_.size() >= kFlushAt) flush();
    }

    void flush() {
        hash_.update(buffer_);
        out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
        buffer_.clear();
        if (!out_) throw IoError("write failed: " + path_.string());
    }

    /// Flushes, closes, and returns the SHA-256 of the file content.
    std::string finish() {
        flush();
        out_.close();
        if (!out_) throw IoError("close failed: " + path_.string());
        return hash_.hex();
    }

private:
    static constexpr std::size_t kFlushAt = 1 << 20;
    std::filesystem::path path_;
    std::ofstream out_;
    std::string buffer_;
    Sha256 hash_;
};

// --- dataset files ----------------------------------------------------------

inline constexpr std::string_view kDatasetHeader =
    "series_id,set,N,draw_index,snr_db,sampling_ratio,sample_interval,t_index,value";

/// A series as the evaluation loop sees it; independent of how it was obtained.
struct EvalSeries {
    std::string id;
    SetLabel set = SetLabel::A;
    std::size_t n_components = 0;
    std::size_t draw_index = 0;
    double snr_db = 0.0;
    double sampling_ratio = 0.0;
    SampledSeries series;
};

inline EvalSeries to_eval_series(const LabeledSeries& ls) {
    return {ls.spec.id,           ls.spec.set,          ls.spec.order(), ls.spec.grid.draw,
            ls.spec.snr_db,       ls.spec.sampling_ratio, ls.series};
}

/// Long format, one row per observation. `sink(std::string&)` is called with
/// buffered chunks and must consume (clear) them.
template <typename Sink>
void serialize_dataset(std::span<const EvalSeries> dataset, Sink&& sink) {
    std::string b;
    b.reserve(1 << 20);
    b.append(kDatasetHeader);
    b.push_back('\n');
    std::string prefix;
    for (const auto& s : dataset) {
        prefix.clear();
        prefix.append(s.id).push_back(',');
        prefix.append(to_string(s.set)).push_back(',');
        append_unsigned(prefix, s.n_components);
        prefix.push_back(',');
        append_unsigned(prefix, s.draw_index);
        prefix.push_back(',');
        append_double(prefix, s.snr_db);
        prefix.push_back(',');
        append_double(prefix, s.sampling_ratio);
        prefix.push_back(',');
        append_double(prefix, s.series.sample_interval);
        prefix.push_back(',');
        for (std::size_t k = 0; k < s.series.values.size(); ++k) {
            b.append(prefix);
            append_unsigned(b, k);
            b.push_back(',');
            append_double(b, s.series.values[k]);
            b.push_back('\n');
        }
        if (b.size() >= (1u << 20)) sink(b);
    }
    sink(b);
}

/// SHA-256 of the dataset file that write_dataset_csv would produce.
inline std::string dataset_content_hash(std::span<const EvalSeries> dataset) {
    Sha256 h;
    serialize_dataset(dataset, [&](std::string& chunk) {
        h.update(chunk);
        chunk.clear();
    });
    return h.hex();
}

/// Writes the dataset file and returns its content hash.
inline std::string write_dataset_csv(const std::filesystem::path& path, std::span<const EvalSeries> dataset) {
    HashingWriter w(path);
    serialize_dataset(dataset, [&](std::string& chunk) {
        w.buffer().append(chunk);
        chunk.clear();
        w.maybe_flush();
    });
    return w.finish();
}

/// Reads a dataset file written by write_dataset_csv. Rows of one series must be
/// contiguous with t_index 0, 1, 2, ...
inline std::vector<EvalSeries> read_dataset_csv(const std::filesystem::path& path, std::size_t context_length) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader) {
        throw IoError("unexpected dataset header in " + path.string());
    }
    std::vector<EvalSeries> out;
    std::size_t line_no = 1;
    auto bad = [&](const char* why) {
        return IoError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 9) throw bad("expected 9 fields");
        const auto t_index = parse_unsigned(f[7]);
        const auto value = parse_double(f[8]);
        if (!t_index || !value) throw bad("malformed t_index or value");
        if (out.empty() || out.back().id != f[0]) {
            if (*t_index != 0) throw bad("series does not start at t_index 0");
            const auto set = parse_set_label(f[1]);
            const auto n = parse_unsigned(f[2]);
            const auto draw = parse_unsigned(f[3]);
            const auto snr = parse_double(f[4]);
            const auto ratio = parse_double(f[5]);
            const auto dt = parse_double(f[6]);
            if (!set || !n || !draw || !snr || !ratio || !dt) throw bad("malformed series metadata");
            EvalSeries s;
            s.id = std::string(f[0]);
            s.set = *set;
            s.n_components = *n;
            s.draw_index = *draw;
            s.snr_db = *snr;
            s.sampling_ratio = *ratio;
            s.series.sample_interval = *dt;
            s.series.spec_ref = s.id;
            out.push_back(std::move(s));
        } else if (*t_index != out.back().series.values.size()) {
            throw bad("t_index out of sequence");
        }
        out.back().series.values.push_back(*value);
    }
    for (auto& s : out) {
        if (s.series.values.size() <= context_length) {
            throw IoError(path.string() + ": series " + s.id + " is not longer than the context length");
        }
        s.series.context_length = context_length;
        s.series.horizon = s.series.values.size() - context_length;
    }
    return out;
}

inline constexpr std::string_view kDrawsHeader =
    "set,N,draw_index,component,amplitude,frequency_numerator,frequency_denominator,phase,period_exact,"
    "period_lcm_denominators";

/// One row per component of every distinct (N, draw), with both period forms.
inline std::string write_draws_csv(const std::filesystem::path& path, std::span<const LabeledSeries> dataset) {
    HashingWriter w(path);
    auto& b = w.buffer();
    b.append(kDrawsHeader);
    b.push_back('\n');
    for (const auto& ls : dataset) {
        const auto& g = ls.spec.grid;
        if (g.snr_index != 0 || g.ratio_index != 0) continue;
        const auto period = fundamental_period(ls.spec.components).str();
        const auto lcm_b = denominator_lcm(ls.spec.components).str();
        for (std::size_t c = 0; c < ls.spec.components.size(); ++c) {
            const auto& comp = ls.spec.components[c];
            b.append(to_string(ls.spec.set)).push_back(',');
            append_unsigned(b, ls.spec.order());
            b.push_back(',');
            append_unsigned(b, g.draw);
            b.push_back(',');
            append_unsigned(b, c);
            b.push_back(',');
            append_double(b, comp.amplitude);
            b.push_back(',');
            b.append(std::to_string(comp.frequency.numerator())).push_back(',');
            b.append(std::to_string(comp.frequency.denominator())).push_back(',');
            append_double(b, comp.phase);
            b.push_back(',');
            b.append(period).push_back(',');
            b.append(lcm_b).push_back('\n');
        }
        w.maybe_flush();
    }
    return w.finish();
}

// --- results files ----------------------------------------------------------

inline constexpr std::string_view kResultsHeader =
    "series_id,set,model,N,snr_db,sampling_ratio,mse,mae,mase,r2,error";

inline std::string escape_field(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(c == ',' || c == '\n' || c == '\r' ? ' ' : c);
    return out;
}

inline std::string format_result_row(const ForecastRecord& r) {
    std::string b;
    b.append(r.series_id).push_back(',');
    b.append(to_string(r.set)).push_back(',');
    b.append(escape_field(r.model_id)).push_back(',');
    append_unsigned(b, r.n_components);
    b.push_back(',');
    append_double(b, r.snr_db);
    b.push_back(',');
    append_double(b, r.sampling_ratio);
    b.push_back(',');
    auto opt = [&](std::optional<double> v) {
        if (v) append_double(b, *v);
        b.push_back(',');
    };
    if (r.metrics) {
        opt(r.metrics->mse);
        opt(r.metrics->mae);
        opt(r.metrics->mase);
        opt(r.metrics->r_squared);
    } else {
        b.append(",,,,");
    }
    b.append(escape_field(r.error));
    b.push_back('\n');
    return b;
}

struct ResultsFile {
    std::vector<ForecastRecord> records;
    std::size_t malformed = 0;
};

/// Parses a results CSV; malformed rows are skipped and counted.
inline ResultsFile read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) {
        throw IoError("unexpected results header in " + path.string());
    }
    ResultsFile out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_fields(line);
        const auto set = f.size() == 11 ? parse_set_label(f[1]) : std::nullopt;
        const auto n = f.size() == 11 ? parse_unsigned(f[3]) : std::nullopt;
        const auto snr = f.size() == 11 ? parse_double(f[4]) : std::nullopt;
        const auto ratio = f.size() == 11 ? parse_double(f[5]) : std::nullopt;
        if (!set || !n || !snr || !ratio || f[0].empty() || f[2].empty()) {
            ++out.malformed;
            continue;
        }
        ForecastRecord r;
        r.series_id = std::string(f[0]);
        r.set = *set;
        r.model_id = std::string(f[2]);
        r.n_components = *n;
        r.snr_db = *snr;
        r.sampling_ratio = *ratio;
        r.error = std::string(f[10]);
        const bool has_metrics = !f[6].empty() || !f[7].empty();
        if (has_metrics) {
            const auto mse = parse_double(f[6]);
            const auto mae = parse_double(f[7]);
            if (!mse || !mae) {
                ++out.malformed;
                continue;
            }
            ForecastMetrics m{*mse, *mae, std::nullopt, std::nullopt};
            bool ok = true;
            if (!f[8].empty()) ok = ok && (m.mase = parse_double(f[8])).has_value();
            if (!f[9].empty()) ok = ok && (m.r_squared = parse_double(f[9])).has_value();
            if (!ok) {
                ++out.malformed;
                continue;
            }
            r.metrics = m;
        } else if (r.error.empty()) {
            ++out.malformed;
            continue;
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

}  // namespace sinebench
