#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace sinebench {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds a list of words into one stream key. Order-sensitive.
constexpr std::uint64_t derive_key(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = mix64(master);
    for (std::uint64_t part : path) {
        key = mix64(key ^ mix64(part + 0x632be59bd9b4e019ULL));
    }
    return key;
}

/// Counter-based generator: the i-th output is a pure function of (key, i).
///
/// Splitting rule: a child stream is `CounterRng(derive_key(parent_key, {labels...}))`.
/// Any stream can be regenerated in isolation from its key, and streams with
/// different keys are statistically independent for all practical purposes.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    constexpr std::uint64_t next_u64() noexcept {
        const std::uint64_t out = mix64(key_ ^ mix64(counter_));
        ++counter_;
        return out;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log argument.
    double next_open_unit() noexcept { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * next_unit(); }

    /// Uniform integer in [lo, hi] by multiply-high; fixed one draw per call.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
        const auto span = static_cast<unsigned __int128>(hi - lo) + 1;
        const auto prod = static_cast<unsigned __int128>(next_u64()) * span;
        return lo + static_cast<std::int64_t>(prod >> 64);
    }

    /// Standard normal via Box-Muller. Consumes exactly two words per pair,
    /// caching the second variate.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_open_unit();
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sinebench
