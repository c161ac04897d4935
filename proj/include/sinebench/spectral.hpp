#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace sinebench {

/// One sinusoid recovered from the spectrum, in sine convention:
/// x[k] = amplitude * sin(2*pi*frequency*k + phase), frequency in cycles/sample.
struct RecoveredComponent {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    std::size_t bin = 0;
};

/// Periodic (DFT-even) Hann window: w[k] = 0.5 * (1 - cos(2*pi*k / L)).
inline std::vector<double> hann_window(std::size_t length) {
    if (length < 2) {
        throw std::domain_error("hann_window: length must be >= 2");
    }
    std::vector<double> w(length);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(length);
    for (std::size_t k = 0; k < length; ++k) {
        w[k] = 0.5 * (1.0 - std::cos(step * static_cast<double>(k)));
    }
    return w;
}

namespace detail {

/// Real-to-complex transform of fixed length. Plans are created once per length;
/// fftw_execute_dft_r2c on a shared plan is thread-safe, plan creation is not.
class RealFft {
public:
    static const RealFft& for_length(std::size_t n) {
        static std::mutex mutex;
        static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[n];
        if (!slot) slot.reset(new RealFft(n));
        return *slot;
    }

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    ~RealFft() { fftw_destroy_plan(plan_); }

    /// Returns bins 0..n/2 of sum_k x[k] exp(-2*pi*i*m*k/n).
    std::vector<std::complex<double>> forward(std::span<const double> input) const {
        double* in = fftw_alloc_real(n_);
        fftw_complex* out = fftw_alloc_complex(n_ / 2 + 1);
        std::copy(input.begin(), input.end(), in);
        fftw_execute_dft_r2c(plan_, in, out);
        std::vector<std::complex<double>> spectrum(n_ / 2 + 1);
        for (std::size_t m = 0; m < spectrum.size(); ++m) spectrum[m] = {out[m][0], out[m][1]};
        fftw_free(out);
        fftw_free(in);
        return spectrum;
    }

private:
    explicit RealFft(std::size_t n) : n_(n) {
        double* in = fftw_alloc_real(n);
        fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
        fftw_free(out);
        fftw_free(in);
        if (plan_ == nullptr) throw std::runtime_error("fftw: plan creation failed");
    }

    std::size_t n_;
    fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// One-sided spectrum of the Hann-windowed context, bins 0..T/2.
inline std::vector<std::complex<double>> windowed_spectrum(std::span<const double> context) {
    const auto window = hann_window(context.size());
    std::vector<double> tapered(context.size());
    for (std::size_t k = 0; k < context.size(); ++k) tapered[k] = context[k] * window[k];
    return detail::RealFft::for_length(context.size()).forward(tapered);
}

/// Recovers sinusoids from the Hann-windowed context.
///
/// A bin m >= 1 survives when its magnitude is at least threshold_fraction times the
/// largest non-DC magnitude and it is a local maximum of the magnitude spectrum. The
/// periodic Hann window spreads an on-bin tone over m-1, m, m+1 with side bins at half
/// the centre height, so flat clipping alone would turn one tone into three.
///
/// Amplitude = 4|S_m|/T (one-sided doubling times the 0.5 coherent gain), except the
/// Nyquist bin which has no mirror image. Phase = arg(S_m) + pi/2 converts the cosine
/// reference of the DFT to the sine form.
inline std::vector<RecoveredComponent> extract_components(std::span<const double> context,
                                                          double threshold_fraction = 0.2) {
    if (context.size() < 2) {
        throw std::domain_error("extract_components: context must hold at least 2 samples");
    }
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
        throw std::domain_error("extract_components: threshold_fraction must lie in (0, 1)");
    }
    const std::size_t length = context.size();
    const auto spectrum = windowed_spectrum(context);
    const std::size_t last = spectrum.size() - 1;
    const bool has_nyquist = length % 2 == 0;

    std::vector<double> magnitude(spectrum.size());
    double peak = 0.0;
    for (std::size_t m = 1; m <= last; ++m) {
        magnitude[m] = std::abs(spectrum[m]);
        peak = std::max(peak, magnitude[m]);
    }
    std::vector<RecoveredComponent> out;
    if (!(peak > 0.0)) return out;

    const double cutoff = threshold_fraction * peak;
    const double scale = static_cast<double>(length);
    for (std::size_t m = 1; m <= last; ++m) {
        const double mag = magnitude[m];
        if (mag < cutoff || mag == 0.0) continue;
        // Plateaus keep their first bin only.
        const bool above_left = m == 1 || mag > magnitude[m - 1];
        const bool not_below_right = m == last || mag >= magnitude[m + 1];
        if (!(above_left && not_below_right)) continue;

        const bool nyquist = has_nyquist && m == last;
        RecoveredComponent c;
        c.bin = m;
        c.amplitude = (nyquist ? 2.0 : 4.0) * mag / scale;
        c.frequency = static_cast<double>(m) / scale;
        c.phase = std::arg(spectrum[m]) + std::numbers::pi / 2.0;
        out.push_back(c);
    }
    return out;
}

/// Evaluates the recovered sinusoids at sample indices [first, first + count).
inline std::vector<double> reconstruct(std::span<const RecoveredComponent> components, std::size_t first,
                                       std::size_t count) {
    std::vector<double> out(count, 0.0);
    for (const auto& c : components) {
        for (std::size_t j = 0; j < count; ++j) {
            const double cycles = c.frequency * static_cast<double>(first + j);
            const double frac = cycles - std::floor(cycles);
            out[j] += c.amplitude * std::sin(2.0 * std::numbers::pi * frac + c.phase);
        }
    }
    return out;
}

/// Zero-shot spectral forecast: recover sinusoids from the context and continue them
/// over [T, T + horizon).
inline std::vector<double> forecast_fft(std::span<const double> context, std::size_t horizon,
                                        double threshold_fraction = 0.2) {
    const auto components = extract_components(context, threshold_fraction);
    return reconstruct(components, context.size(), horizon);
}

}  // namespace sinebench
