#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

namespace sinebench {

/// x_t - mean = sum_k coefficients[k-1] * (x_{t-k} - mean) + e_t
struct ArModel {
    std::size_t order = 0;
    std::vector<double> coefficients;
    double context_mean = 0.0;
    double residual_variance = 0.0;
    double aic = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<double> centered(std::span<const double> x, double& mean) {
    mean = x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - mean;
    return out;
}

/// Lagged design for rows t = order..T-1: row r holds x[t-1], ..., x[t-order].
inline void lagged_design(std::span<const double> x, std::size_t order, Eigen::MatrixXd& design,
                          Eigen::VectorXd& target) {
    const std::size_t rows = x.size() - order;
    design.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(order));
    target.resize(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = order + r;
        target(static_cast<Eigen::Index>(r)) = x[t];
        for (std::size_t k = 1; k <= order; ++k) {
            design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k - 1)) = x[t - k];
        }
    }
}

inline double residual_sum_of_squares(std::span<const double> x, std::size_t order, const Eigen::VectorXd& coef) {
    double rss = 0.0;
    for (std::size_t t = order; t < x.size(); ++t) {
        double pred = 0.0;
        for (std::size_t k = 1; k <= order; ++k) pred += coef(static_cast<Eigen::Index>(k - 1)) * x[t - k];
        const double e = x[t] - pred;
        rss += e * e;
    }
    return rss;
}

/// Minimum-norm least squares via complete orthogonal decomposition.
inline Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    return cod.solve(target);
}

inline void check_order(std::size_t length, std::size_t order) {
    if (order == 0) throw std::invalid_argument("fit_ar: order must be positive");
    if (2 * order >= length) throw std::invalid_argument("fit_ar: order must be below half the context length");
}

}  // namespace detail

/// Per-observation AIC: ln(RSS / n_eff) + 2p / n_eff with n_eff = T - p.
///
/// The unnormalised n_eff * ln(RSS / n_eff) + 2p shifts by (T - p) * ln(c^2) when the
/// data is scaled by c, so its choice of order depends on the units of the series.
inline double ar_aic(double rss, std::size_t length, std::size_t order) {
    const double n_eff = static_cast<double>(length - order);
    return std::log(rss / n_eff) + 2.0 * static_cast<double>(order) / n_eff;
}

/// Ordinary least squares AR(order) on the mean-centred context, no intercept, no penalty.
inline ArModel fit_ar(std::span<const double> context, std::size_t order) {
    detail::check_order(context.size(), order);
    ArModel model;
    model.order = order;
    const auto x = detail::centered(context, model.context_mean);

    Eigen::MatrixXd design;
    Eigen::VectorXd target;
    detail::lagged_design(x, order, design, target);
    const Eigen::VectorXd coef = detail::min_norm_solve(design, target);

    const double rss = detail::residual_sum_of_squares(x, order, coef);
    model.coefficients.assign(coef.data(), coef.data() + coef.size());
    model.residual_variance = rss / static_cast<double>(context.size() - order);
    model.aic = ar_aic(rss, context.size(), order);
    return model;
}

/// Largest order the grid search may use for a context of this length.
inline std::size_t clamp_max_order(std::size_t length, std::size_t max_order) {
    if (length < 3) throw std::invalid_argument("select_order: context needs at least 3 samples");
    return std::max<std::size_t>(1, std::min(max_order, (length - 1) / 2));
}

/// AIC for p = 1..max_order (index p-1).
///
/// Each order uses its own rows t = p..T-1. Gram entries come from per-lag prefix sums,
/// sum_{t=p}^{T-1} x[t-i] x[t-j] = P_d[T-i] - P_d[p-i] with d = j - i, so building
/// every normal-equation system costs O(p^2). Residuals are recomputed from the data.
/// Orders whose Gram matrix is near singular (exact-recurrence noise-free input, constant
/// input) are solved with the minimum-norm decomposition on the explicit design instead.
inline std::vector<double> ar_aic_profile(std::span<const double> context, std::size_t max_order = 128) {
    const std::size_t length = context.size();
    const std::size_t top = clamp_max_order(length, max_order);
    double mean = 0.0;
    const auto x = detail::centered(context, mean);

    // prefix[d][s] = sum_{u=d}^{s-1} x[u] x[u-d], s = 0..T
    std::vector<std::vector<double>> prefix(top + 1, std::vector<double>(length + 1, 0.0));
    for (std::size_t d = 0; d <= top; ++d) {
        auto& p = prefix[d];
        for (std::size_t s = 1; s <= length; ++s) {
            const std::size_t u = s - 1;
            p[s] = p[s - 1] + (u >= d ? x[u] * x[u - d] : 0.0);
        }
    }

    std::vector<double> aic(top);
    Eigen::MatrixXd gram;
    Eigen::VectorXd rhs;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (std::size_t order = 1; order <= top; ++order) {
        const auto n = static_cast<Eigen::Index>(order);
        gram.resize(n, n);
        rhs.resize(n);
        for (std::size_t i = 1; i <= order; ++i) {
            for (std::size_t j = i; j <= order; ++j) {
                const auto& p = prefix[j - i];
                const double v = p[length - i] - p[order - i];
                gram(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = v;
                gram(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(i - 1)) = v;
            }
            rhs(static_cast<Eigen::Index>(i - 1)) = prefix[i][length] - prefix[i][order];
        }

        Eigen::VectorXd coef;
        llt.compute(gram);
        if (llt.info() == Eigen::Success && llt.rcond() > 1e-10) {
            coef = llt.solve(rhs);
        } else {
            Eigen::MatrixXd design;
            Eigen::VectorXd target;
            detail::lagged_design(x, order, design, target);
            coef = detail::min_norm_solve(design, target);
        }
        aic[order - 1] = ar_aic(detail::residual_sum_of_squares(x, order, coef), length, order);
    }
    return aic;
}

/// AIC grid search over p = 1..max_order; ties go to the smaller order.
/// The winning order is refit with the minimum-norm solver; `aic` holds the scan value.
inline ArModel select_order(std::span<const double> context, std::size_t max_order = 128) {
    const auto profile = ar_aic_profile(context, max_order);
    std::size_t best = 0;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        if (profile[i] < profile[best]) best = i;
    }
    ArModel model = fit_ar(context, best + 1);
    model.aic = profile[best];
    return model;
}

/// Recursive multi-step forecast; forecasts are fed back as lags.
inline std::vector<double> forecast_ar(std::span<const double> context, const ArModel& model, std::size_t horizon) {
    if (model.coefficients.size() != model.order) {
        throw std::invalid_argument("forecast_ar: coefficient count does not match order");
    }
    if (context.size() < model.order) {
        throw std::invalid_argument("forecast_ar: context shorter than model order");
    }
    std::vector<double> history(context.size() + horizon);
    for (std::size_t i = 0; i < context.size(); ++i) history[i] = context[i] - model.context_mean;
    for (std::size_t j = 0; j < horizon; ++j) {
        const std::size_t t = context.size() + j;
        double v = 0.0;
        for (std::size_t k = 1; k <= model.order; ++k) v += model.coefficients[k - 1] * history[t - k];
        history[t] = v;
    }
    std::vector<double> out(horizon);
    for (std::size_t j = 0; j < horizon; ++j) out[j] = history[context.size() + j] + model.context_mean;
    return out;
}

}  // namespace sinebench
