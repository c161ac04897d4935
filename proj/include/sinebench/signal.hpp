#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rational.hpp"
#include "rng.hpp"

namespace sinebench {

/// Raised for inconsistent generation or run parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SetLabel { A, B };

inline std::string_view to_string(SetLabel s) { return s == SetLabel::A ? "A" : "B"; }

inline std::optional<SetLabel> parse_set_label(std::string_view s) {
    if (s == "A" || s == "a") return SetLabel::A;
    if (s == "B" || s == "b") return SetLabel::B;
    return std::nullopt;
}

struct SineComponent {
    double amplitude = 1.0;
    Rational frequency{1};  // Hz
    double phase = 0.0;     // radians
};

/// Where a spec sits in the generation grid. Only meaningful for grid-generated specs.
struct GridIndex {
    std::size_t n_index = 0;
    std::size_t draw = 0;
    std::size_t snr_index = 0;
    std::size_t ratio_index = 0;
};

struct SignalSpec {
    std::string id;
    SetLabel set = SetLabel::A;
    std::vector<SineComponent> components;
    double snr_db = std::numeric_limits<double>::infinity();
    double sampling_ratio = 4.0;
    std::uint64_t seed = 0;
    std::size_t series_length = 576;
    GridIndex grid;

    std::size_t order() const noexcept { return components.size(); }
};

struct SampledSeries {
    std::vector<double> values;
    double sample_interval = 1.0;  // seconds
    std::size_t context_length = 512;
    std::size_t horizon = 64;
    std::string spec_ref;

    std::span<const double> context() const { return std::span(values).first(context_length); }
    std::span<const double> truth() const { return std::span(values).subspan(context_length, horizon); }
};

struct LabeledSeries {
    SignalSpec spec;
    SampledSeries series;
};

/// Distribution parameters for random draws. Defaults reproduce the benchmark.
struct DrawParameters {
    double amplitude_min = 0.5;
    double amplitude_max = 5.0;
    std::int64_t harmonic_f1_max = 20;    // set A: f_1 ~ U{1..f1_max}
    std::int64_t rational_num_max = 200;  // set B: a ~ U{1..num_max}
    std::int64_t rational_den_max = 200;  // set B: b ~ U{1..den_max}
};

struct GridConfig {
    std::vector<std::size_t> n_values{1, 2, 3, 5, 8, 12, 20};
    std::size_t draws_per_cell = 20;
    std::vector<double> snr_db{2, 5, 10, 15, 20, 30};
    std::vector<double> sampling_ratios{2.1, 2.5, 3, 5, 10, 20};
    std::size_t context_length = 512;
    std::size_t horizon = 64;
    DrawParameters draw;

    std::size_t series_length() const noexcept { return context_length + horizon; }
    std::size_t series_count() const noexcept {
        return n_values.size() * draws_per_cell * snr_db.size() * sampling_ratios.size();
    }
    void validate() const;
};

inline void GridConfig::validate() const {
    if (n_values.empty() || snr_db.empty() || sampling_ratios.empty() || draws_per_cell == 0) {
        throw ConfigError("grid: every axis needs at least one value");
    }
    if (horizon == 0 || context_length < 2) {
        throw ConfigError("grid: context_length must be >= 2 and horizon >= 1");
    }
    for (auto n : n_values) {
        if (n == 0) throw ConfigError("grid: N must be positive");
    }
    for (double r : sampling_ratios) {
        if (!(r > 2.0)) throw ConfigError("grid: sampling ratio must exceed 2 (Nyquist)");
    }
    if (draw.amplitude_min <= 0.0 || draw.amplitude_max < draw.amplitude_min || draw.harmonic_f1_max < 1 ||
        draw.rational_num_max < 1 || draw.rational_den_max < 1) {
        throw ConfigError("grid: invalid draw parameters");
    }
}

inline double max_frequency(std::span<const SineComponent> components) {
    double f = 0.0;
    for (const auto& c : components) f = std::max(f, c.frequency.to_double());
    return f;
}

/// Exact period of the noise-free sum: lcm(b_1..b_N) / gcd(a_1..a_N) for f_n = a_n / b_n.
inline BigRational fundamental_period(std::span<const SineComponent> components) {
    if (components.empty()) {
        throw std::invalid_argument("fundamental_period: no components");
    }
    BigInt den_lcm = 1;
    BigInt num_gcd = 0;
    for (const auto& c : components) {
        den_lcm = detail::lcm_value(den_lcm, BigInt(c.frequency.denominator()));
        num_gcd = detail::gcd_value(num_gcd, BigInt(c.frequency.numerator()));
    }
    return BigRational(den_lcm, num_gcd);
}

/// lcm(b_1..b_N) alone. Equals the exact period only when gcd(a_1..a_N) = 1.
inline BigInt denominator_lcm(std::span<const SineComponent> components) {
    BigInt den_lcm = 1;
    for (const auto& c : components) den_lcm = detail::lcm_value(den_lcm, BigInt(c.frequency.denominator()));
    return den_lcm;
}

/// Average power of a sum of distinct-frequency sinusoids.
inline double signal_power(std::span<const SineComponent> components) {
    double p = 0.0;
    for (const auto& c : components) p += 0.5 * c.amplitude * c.amplitude;
    return p;
}

/// Noise standard deviation giving the requested power SNR.
inline double calibrate_noise_sigma(std::span<const SineComponent> components, double snr_db) {
    if (components.empty()) {
        throw std::invalid_argument("calibrate_noise_sigma: no components");
    }
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    const double variance = signal_power(components) / std::pow(10.0, snr_db / 10.0);
    return std::sqrt(variance);
}

/// Noise-free value of the sum at time t (seconds).
inline double evaluate_clean(std::span<const SineComponent> components, double t) {
    double v = 0.0;
    for (const auto& c : components) {
        const double cycles = c.frequency.to_double() * t;
        const double frac = cycles - std::floor(cycles);
        v += c.amplitude * std::sin(2.0 * std::numbers::pi * frac + c.phase);
    }
    return v;
}

/// Samples the spec at f* = sampling_ratio * f_max and adds calibrated white Gaussian noise.
/// Pure function of the spec (the noise stream is keyed by spec.seed).
inline SampledSeries sample_signal(const SignalSpec& spec, std::size_t context_length = 512) {
    if (spec.components.empty()) {
        throw ConfigError("sample_signal: spec has no components");
    }
    if (!(spec.sampling_ratio > 2.0)) {
        throw ConfigError("sample_signal: sampling ratio must exceed 2 (Nyquist)");
    }
    if (context_length > spec.series_length) {
        throw ConfigError("sample_signal: context longer than series");
    }
    const double f_max = max_frequency(spec.components);
    const double sample_rate = spec.sampling_ratio * f_max;
    const double dt = 1.0 / sample_rate;
    const double sigma = calibrate_noise_sigma(spec.components, spec.snr_db);

    SampledSeries out;
    out.sample_interval = dt;
    out.context_length = context_length;
    out.horizon = spec.series_length - context_length;
    out.spec_ref = spec.id;
    out.values.resize(spec.series_length);

    CounterRng noise(spec.seed);
    for (std::size_t k = 0; k < spec.series_length; ++k) {
        double v = 0.0;
        for (const auto& c : spec.components) {
            // Cycle count k * f / f*, reduced to [0, 1) before scaling by 2*pi.
            const double cycles = static_cast<double>(k) * (c.frequency.to_double() / sample_rate);
            const double frac = cycles - std::floor(cycles);
            v += c.amplitude * std::sin(2.0 * std::numbers::pi * frac + c.phase);
        }
        if (sigma > 0.0) v += sigma * noise.normal();
        out.values[k] = v;
    }
    return out;
}

/// Draws amplitudes and frequencies for one grid draw. Phases are zero.
inline std::vector<SineComponent> draw_components(SetLabel set, std::size_t n, CounterRng& rng,
                                                  const DrawParameters& params = {}) {
    if (n == 0) throw ConfigError("draw_components: N must be positive");
    std::vector<SineComponent> comps;
    comps.reserve(n);
    if (set == SetLabel::A) {
        const std::int64_t f1 = rng.uniform_int(1, params.harmonic_f1_max);
        for (std::size_t i = 1; i <= n; ++i) {
            const double amp = rng.uniform(params.amplitude_min, params.amplitude_max);
            comps.push_back({amp, Rational(f1 * static_cast<std::int64_t>(i)), 0.0});
        }
        return comps;
    }
    if (params.rational_num_max < 1 || params.rational_den_max < 1) {
        throw ConfigError("draw_components: rational ranges must be positive");
    }
    // The integers 1..num_max are always available; count coprime pairs only when N exceeds them.
    if (static_cast<std::int64_t>(n) > params.rational_num_max) {
        std::int64_t distinct = 0;
        for (std::int64_t a = 1; a <= params.rational_num_max; ++a) {
            for (std::int64_t b = 1; b <= params.rational_den_max; ++b) distinct += std::gcd(a, b) == 1 ? 1 : 0;
        }
        if (static_cast<std::int64_t>(n) > distinct) {
            throw ConfigError("draw_components: not enough distinct rationals for N");
        }
    }
    while (comps.size() < n) {
        const auto a = rng.uniform_int(1, params.rational_num_max);
        const auto b = rng.uniform_int(1, params.rational_den_max);
        const Rational f(a, b);
        const bool seen = std::any_of(comps.begin(), comps.end(), [&](const SineComponent& c) { return c.frequency == f; });
        if (seen) continue;
        const double amp = rng.uniform(params.amplitude_min, params.amplitude_max);
        comps.push_back({amp, f, 0.0});
    }
    return comps;
}

/// One random spec; the noise seed is taken from the same stream.
inline SignalSpec draw_spec(SetLabel set, std::size_t n, double snr_db, double sampling_ratio, CounterRng& rng,
                            const DrawParameters& params = {}) {
    SignalSpec spec;
    spec.set = set;
    spec.components = draw_components(set, n, rng, params);
    spec.snr_db = snr_db;
    spec.sampling_ratio = sampling_ratio;
    spec.seed = rng.next_u64();
    return spec;
}

namespace detail {

inline constexpr std::uint64_t kComponentsTag = 0xC0;
inline constexpr std::uint64_t kNoiseTag = 0x40;

inline std::uint64_t set_word(SetLabel s) { return s == SetLabel::A ? 0 : 1; }

}  // namespace detail

/// Stream key for the amplitude/frequency draw shared by all SNR x ratio cells of (N, draw).
inline std::uint64_t components_key(std::uint64_t master_seed, SetLabel set, std::size_t n_index, std::size_t draw) {
    return derive_key(master_seed, {detail::kComponentsTag, detail::set_word(set), n_index, draw});
}

/// Stream key for the noise of one grid cell.
inline std::uint64_t noise_key(std::uint64_t master_seed, SetLabel set, const GridIndex& g) {
    return derive_key(master_seed,
                      {detail::kNoiseTag, detail::set_word(set), g.n_index, g.draw, g.snr_index, g.ratio_index});
}

inline std::size_t flat_index(const GridConfig& grid, const GridIndex& g) {
    return ((g.n_index * grid.draws_per_cell + g.draw) * grid.snr_db.size() + g.snr_index) *
               grid.sampling_ratios.size() +
           g.ratio_index;
}

inline std::string series_id(SetLabel set, std::size_t flat) {
    std::string digits = std::to_string(flat);
    if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
    return std::string(to_string(set)) + "-" + digits;
}

/// Spec for a single grid cell, regenerable without generating the rest of the dataset.
inline SignalSpec grid_spec(SetLabel set, std::uint64_t master_seed, const GridConfig& grid, const GridIndex& g) {
    CounterRng draw_rng(components_key(master_seed, set, g.n_index, g.draw));
    SignalSpec spec;
    spec.id = series_id(set, flat_index(grid, g));
    spec.set = set;
    spec.components = draw_components(set, grid.n_values.at(g.n_index), draw_rng, grid.draw);
    spec.snr_db = grid.snr_db.at(g.snr_index);
    spec.sampling_ratio = grid.sampling_ratios.at(g.ratio_index);
    spec.seed = noise_key(master_seed, set, g);
    spec.series_length = grid.series_length();
    spec.grid = g;
    return spec;
}

inline LabeledSeries grid_series(SetLabel set, std::uint64_t master_seed, const GridConfig& grid, const GridIndex& g) {
    LabeledSeries out;
    out.spec = grid_spec(set, master_seed, grid, g);
    out.series = sample_signal(out.spec, grid.context_length);
    return out;
}

/// Full Cartesian grid, ordered N, draw, SNR, ratio (ratio fastest).
inline std::vector<LabeledSeries> generate_dataset(SetLabel set, std::uint64_t master_seed,
                                                   const GridConfig& grid = {}) {
    grid.validate();
    std::vector<LabeledSeries> out;
    out.reserve(grid.series_count());
    for (std::size_t ni = 0; ni < grid.n_values.size(); ++ni) {
        for (std::size_t d = 0; d < grid.draws_per_cell; ++d) {
            CounterRng draw_rng(components_key(master_seed, set, ni, d));
            const auto comps = draw_components(set, grid.n_values[ni], draw_rng, grid.draw);
            for (std::size_t si = 0; si < grid.snr_db.size(); ++si) {
                for (std::size_t ri = 0; ri < grid.sampling_ratios.size(); ++ri) {
                    const GridIndex g{ni, d, si, ri};
                    LabeledSeries ls;
                    ls.spec.id = series_id(set, out.size());
                    ls.spec.set = set;
                    ls.spec.components = comps;
                    ls.spec.snr_db = grid.snr_db[si];
                    ls.spec.sampling_ratio = grid.sampling_ratios[ri];
                    ls.spec.seed = noise_key(master_seed, set, g);
                    ls.spec.series_length = grid.series_length();
                    ls.spec.grid = g;
                    ls.series = sample_signal(ls.spec, grid.context_length);
                    out.push_back(std::move(ls));
                }
            }
        }
    }
    return out;
}

}  // namespace sinebench
