#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sinebench/spectral.hpp"
#include "test_support.hpp"

using namespace sinebench;
using namespace sinebench::testing;

TEST(HannWindow, SmallExamples) {
    const auto w4 = hann_window(4);
    const double expected[] = {0.0, 0.5, 1.0, 0.5};
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(w4[k], expected[k], 1e-15);

    const auto w8 = hann_window(8);
    double s = 0.0;
    for (double v : w8) s += v;
    EXPECT_NEAR(s / 8.0, 0.5, 1e-15);

    for (std::size_t len : {2u, 3u, 17u, 512u}) EXPECT_EQ(hann_window(len)[0], 0.0);
    EXPECT_THROW(hann_window(1), std::domain_error);
    EXPECT_THROW(hann_window(0), std::domain_error);
}

TEST(WindowedSpectrum, MatchesDirectDft) {
    const auto x = add(tone(64, 5.0 / 64, 1.3, 0.4), white_noise(64, 8, 0.2));
    const auto spectrum = windowed_spectrum(x);
    const auto w = hann_window(64);
    ASSERT_EQ(spectrum.size(), 33u);
    for (std::size_t m = 0; m < spectrum.size(); ++m) {
        std::complex<double> acc = 0.0;
        for (std::size_t k = 0; k < 64; ++k) {
            acc += w[k] * x[k] * std::polar(1.0, -2.0 * std::numbers::pi * double(m * k) / 64.0);
        }
        EXPECT_NEAR(std::abs(spectrum[m] - acc), 0.0, 1e-11) << m;
    }
}

TEST(ExtractComponents, ExactBinToneRoundTrip) {
    for (double phase : {0.0, 0.3, -1.2, 2.5}) {
        const auto x = tone(512, 16.0 / 512, 1.0, phase);
        const auto comps = extract_components(x);
        ASSERT_EQ(comps.size(), 1u);
        EXPECT_NEAR(comps[0].amplitude, 1.0, 0.01);
        EXPECT_EQ(comps[0].frequency, 16.0 / 512);
        EXPECT_LT(std::abs(wrap_angle(comps[0].phase - phase)), 1e-6);
    }
}

TEST(ExtractComponents, SeveralExactBinTones) {
    const auto x = add(add(tone(512, 10.0 / 512, 2.0, 0.7), tone(512, 40.0 / 512, 1.0, -0.4)),
                       tone(512, 100.0 / 512, 3.0, 1.9));
    const auto comps = extract_components(x);
    ASSERT_EQ(comps.size(), 3u);
    const double amps[] = {2.0, 1.0, 3.0};
    const double phases[] = {0.7, -0.4, 1.9};
    const std::size_t bins[] = {10, 40, 100};
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(comps[i].bin, bins[i]);
        EXPECT_NEAR(comps[i].amplitude, amps[i], 0.01 * amps[i]);
        EXPECT_LT(std::abs(wrap_angle(comps[i].phase - phases[i])), 1e-6);
    }
}

TEST(ExtractComponents, ThresholdDiscardsSmallPeak) {
    // Peak bin magnitude 10 and a separate peak at 1.9: 1.9 < 0.2 * 10.
    const double t = 512.0;
    const auto x = add(tone(512, 30.0 / t, 10.0 * 4.0 / t), tone(512, 90.0 / t, 1.9 * 4.0 / t));
    const auto spectrum = windowed_spectrum(x);
    ASSERT_NEAR(std::abs(spectrum[30]), 10.0, 1e-9);
    ASSERT_NEAR(std::abs(spectrum[90]), 1.9, 1e-9);
    const auto comps = extract_components(x);
    ASSERT_EQ(comps.size(), 1u);
    EXPECT_EQ(comps[0].bin, 30u);
    // 2.1 survives.
    const auto y = add(tone(512, 30.0 / t, 10.0 * 4.0 / t), tone(512, 90.0 / t, 2.1 * 4.0 / t));
    EXPECT_EQ(extract_components(y).size(), 2u);
}

TEST(ExtractComponents, ZeroContextGivesNothing) {
    const std::vector<double> zeros(512, 0.0);
    EXPECT_TRUE(extract_components(zeros).empty());
    const auto f = forecast_fft(zeros, 64);
    ASSERT_EQ(f.size(), 64u);
    for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(ExtractComponents, DcBinIsNotAComponent) {
    // A small offset leaks into bin 1 at a quarter of its DC height; bin 0 itself never counts.
    auto y = tone(256, 8.0 / 256);
    for (auto& v : y) v += 0.1;
    const auto comps = extract_components(y);
    ASSERT_EQ(comps.size(), 1u);
    EXPECT_EQ(comps[0].bin, 8u);
}

TEST(ExtractComponents, BadArguments) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(extract_components(one), std::domain_error);
    const auto x = tone(64, 0.1);
    EXPECT_THROW(extract_components(x, 0.0), std::domain_error);
    EXPECT_THROW(extract_components(x, 1.0), std::domain_error);
    EXPECT_THROW(extract_components(x, std::nan("")), std::domain_error);
}

TEST(ExtractComponents, InvariantsOnNoisyContexts) {
    for (std::uint64_t key = 0; key < 40; ++key) {
        CounterRng rng(key);
        const double f = rng.uniform(0.01, 0.45);
        const auto x = add(tone(300 + key, f, rng.uniform(0.5, 5.0), rng.uniform(-3, 3)),
                           white_noise(300 + key, key + 1000, rng.uniform(0.1, 3.0)));
        std::size_t previous = SIZE_MAX;
        for (double threshold : {0.05, 0.1, 0.2, 0.4, 0.8, 0.99}) {
            const auto comps = extract_components(x, threshold);
            EXPECT_LE(comps.size(), previous);
            previous = comps.size();
            for (const auto& c : comps) {
                EXPECT_GT(c.amplitude, 0.0);
                EXPECT_GE(c.frequency, 0.0);
                EXPECT_LE(c.frequency, 0.5);
            }
        }
    }
}

TEST(ExtractComponents, ScaleEquivariance) {
    const auto x = add(add(tone(512, 0.0371, 2.0), tone(512, 0.21, 0.8, 1.0)), white_noise(512, 4, 0.5));
    const auto base = extract_components(x);
    for (double c : {0.001, 0.5, 3.0, 1e6}) {
        std::vector<double> y(x);
        for (auto& v : y) v *= c;
        const auto scaled = extract_components(y);
        ASSERT_EQ(scaled.size(), base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            EXPECT_EQ(scaled[i].bin, base[i].bin);
            EXPECT_NEAR(scaled[i].amplitude, c * base[i].amplitude, 1e-12 * c * base[i].amplitude);
        }
        const auto fb = forecast_fft(x, 64);
        const auto fs = forecast_fft(y, 64);
        for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(fs[k], c * fb[k], 1e-10 * c * (1.0 + std::abs(fb[k])));
    }
}

TEST(ForecastFft, ExactBinToneContinuesAnalytically) {
    for (std::size_t bin : {3u, 16u, 77u, 200u}) {
        const double f = double(bin) / 512.0;
        const auto context = tone(512, f, 1.7, 0.9);
        const auto truth = tone(64, f, 1.7, 0.9, 512);
        const auto forecast = forecast_fft(context, 64);
        ASSERT_EQ(forecast.size(), 64u);
        EXPECT_LT(relative_mse(forecast, truth), 1e-3) << bin;
    }
}

TEST(ForecastFft, OutputLengthEqualsHorizon) {
    const auto x = white_noise(100, 3);
    for (std::size_t h : {1u, 2u, 64u, 1000u}) EXPECT_EQ(forecast_fft(x, h).size(), h);
}

TEST(ForecastFft, OddLengthContext) {
    const auto odd = tone(511, 20.0 / 511, 1.0, 0.2);
    const auto c = extract_components(odd);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_NEAR(c[0].amplitude, 1.0, 0.01);
    EXPECT_LT(std::abs(wrap_angle(c[0].phase - 0.2)), 1e-6);
    EXPECT_LT(relative_mse(forecast_fft(odd, 64), tone(64, 20.0 / 511, 1.0, 0.2, 511)), 1e-3);
}
