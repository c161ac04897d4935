#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "autoregressive.hpp"
#include "spectral.hpp"

namespace sinebench {

/// A forecaster failed on one series; the run records an error row and moves on.
class ForecastError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Context + horizon -> point forecast. Built-in implementations are stateless and
/// may be shared between threads; bridge-backed ones are not.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::string id() const = 0;
    virtual std::string version() const { return "builtin"; }
    virtual std::vector<double> forecast(std::span<const double> context, std::size_t horizon,
                                         double sample_interval) = 0;
};

class FftForecaster final : public Forecaster {
public:
    explicit FftForecaster(double threshold_fraction = 0.2) : threshold_(threshold_fraction) {}
    std::string id() const override { return "fft"; }
    std::vector<double> forecast(std::span<const double> context, std::size_t horizon, double) override {
        return forecast_fft(context, horizon, threshold_);
    }

private:
    double threshold_;
};

class ArForecaster final : public Forecaster {
public:
    explicit ArForecaster(std::size_t max_order = 128) : max_order_(max_order) {}
    std::string id() const override { return "ar"; }
    std::vector<double> forecast(std::span<const double> context, std::size_t horizon, double) override {
        return forecast_ar(context, select_order(context, max_order_), horizon);
    }

private:
    std::size_t max_order_;
};

/// Repeats the last observation.
class NaiveForecaster final : public Forecaster {
public:
    std::string id() const override { return "naive"; }
    std::vector<double> forecast(std::span<const double> context, std::size_t horizon, double) override {
        if (context.empty()) throw ForecastError("empty context");
        return std::vector<double>(horizon, context.back());
    }
};

inline std::vector<std::string> builtin_forecaster_names() { return {"fft", "ar", "naive"}; }

struct BuiltinOptions {
    double fft_threshold = 0.2;
    std::size_t ar_max_order = 128;
};

/// Returns nullptr for unknown names.
inline std::unique_ptr<Forecaster> make_builtin(const std::string& name, const BuiltinOptions& opts = {}) {
    if (name == "fft") return std::make_unique<FftForecaster>(opts.fft_threshold);
    if (name == "ar") return std::make_unique<ArForecaster>(opts.ar_max_order);
    if (name == "naive") return std::make_unique<NaiveForecaster>();
    return nullptr;
}

}  // namespace sinebench
