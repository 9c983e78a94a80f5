#pragma once

// The three clinically-motivated utility costs for vital-sign predictions:
//
//   range cost       — penalizes disagreement in "how far out of the normal
//                      range" truth and prediction are, through a two-sided
//                      sigmoid importance curve;
//   trend cost       — asymmetric quadratic penalty on the gap between the
//                      actual and predicted signal slope over a window;
//   trend deviation  — prediction error weighted by how much the realized
//                      trend diverges from its linear extrapolation, i.e.
//                      how surprising the trajectory is.
//
// Each cost ships with an analytic (sub)gradient with respect to the
// prediction, exact up to the stated kink conventions, so the costs can be
// used directly as training-loss terms.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "vitalcast/core.hpp"

namespace vitalcast {

struct TooFewPoints : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientHistory : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientHorizon : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// logistic(x) = 1 / (1 + exp(-x)), overflow-safe on both tails.
inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

// Two-sided sigmoid importance curve: ~0 inside [l, h], rising toward the
// plateau L beyond each threshold. Stored steepness values are positive;
// the orientation signs live here. The outer max(., 0) clamps are kept for
// fidelity to the curve definition even though both terms are positive
// under this orientation.
inline double two_sided_sigmoid(double value, const NormalRangeParams& p) {
    const double high = p.amplitude * detail::logistic(p.steepness_high * (value - p.high_threshold));
    const double low = p.amplitude * detail::logistic(p.steepness_low * (p.low_threshold - value));
    return std::max(high, 0.0) + std::max(low, 0.0);
}

// Exact derivative of two_sided_sigmoid.
inline double two_sided_sigmoid_derivative(double value, const NormalRangeParams& p) {
    const double sh = detail::logistic(p.steepness_high * (value - p.high_threshold));
    const double sl = detail::logistic(p.steepness_low * (p.low_threshold - value));
    return p.amplitude * p.steepness_high * sh * (1.0 - sh) -
           p.amplitude * p.steepness_low * sl * (1.0 - sl);
}

// |f(y) - f(y_hat)|: zero when both sit at the same importance level,
// approaching L when one is deep in range and the other far outside.
inline double normal_range_cost(double y, double y_hat, const NormalRangeParams& p) {
    return std::abs(two_sided_sigmoid(y, p) - two_sided_sigmoid(y_hat, p));
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Subgradient of normal_range_cost with respect to the prediction.
// Convention at the kink f(y_hat) == f(y): 0, so the optimum is a fixed
// point of gradient descent.
inline double range_cost_subgradient(double y, double y_hat, const NormalRangeParams& p) {
    const double diff = two_sided_sigmoid(y_hat, p) - two_sided_sigmoid(y, p);
    return sign_of(diff) * two_sided_sigmoid_derivative(y_hat, p);
}

// Ordinary-least-squares slope of values against positions 0..len-1, in
// value-per-step units.
inline double ols_slope(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw TooFewPoints("ols_slope needs at least 2 points");
    const double x_mean = static_cast<double>(n - 1) / 2.0;
    double y_mean = 0.0;
    for (double v : values) y_mean += v;
    y_mean /= static_cast<double>(n);
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sxy += (static_cast<double>(i) - x_mean) * (values[i] - y_mean);
    const double dn = static_cast<double>(n);
    const double sxx = dn * (dn * dn - 1.0) / 12.0;
    return sxy / sxx;
}

// The OLS slope is linear in each input point; these are its per-point
// coefficients for a window of the given length.
inline std::vector<double> ols_slope_weights(std::size_t window_len) {
    if (window_len < 2) throw TooFewPoints("slope weights need a window of >= 2 points");
    const double dn = static_cast<double>(window_len);
    const double x_mean = (dn - 1.0) / 2.0;
    const double sxx = dn * (dn * dn - 1.0) / 12.0;
    std::vector<double> w(window_len);
    for (std::size_t i = 0; i < window_len; ++i) w[i] = (static_cast<double>(i) - x_mean) / sxx;
    return w;
}

// Slope coefficients of the m predicted points inside the mixed
// history-plus-prediction window of length n + m + 1.
inline std::vector<double> predicted_point_slope_weights(int lookback_n, int horizon_m) {
    const auto all = ols_slope_weights(static_cast<std::size_t>(lookback_n + horizon_m + 1));
    return {all.begin() + lookback_n + 1, all.end()};
}

// Slopes around an anchor time t:
//   expected  — truth over the n preceding steps (what extrapolation assumes)
//   actual    — truth over the full window t-n .. t+m
//   predicted — same window with the m future truth points replaced by
//               model predictions
struct TrendTriple {
    double expected_trend = 0.0;
    double actual_trend = 0.0;
    double predicted_trend = 0.0;
};

inline TrendTriple trend_triple(const VitalSeries& truth, const PredictionSeries& prediction,
                                std::int64_t t, const TrendParams& params) {
    params.validate();
    const int n = params.lookback_n;
    const int m = params.horizon_m;
    std::vector<double> history;  // truth t-n .. t
    history.reserve(static_cast<std::size_t>(n + 1));
    for (std::int64_t i = t - n; i <= t; ++i) {
        const auto v = truth.value_at(i);
        if (!v) throw InsufficientHistory("truth missing at index " + std::to_string(i));
        history.push_back(*v);
    }
    std::vector<double> future_truth, future_pred;  // t+1 .. t+m
    future_truth.reserve(static_cast<std::size_t>(m));
    future_pred.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = t + 1; i <= t + m; ++i) {
        const auto tv = truth.value_at(i);
        if (!tv) throw InsufficientHorizon("truth missing at index " + std::to_string(i));
        const auto pv = prediction.series.value_at(i);
        if (!pv) throw InsufficientHorizon("prediction missing at index " + std::to_string(i));
        future_truth.push_back(*tv);
        future_pred.push_back(*pv);
    }

    TrendTriple triple;
    triple.expected_trend = ols_slope(history);

    std::vector<double> window = history;
    window.insert(window.end(), future_truth.begin(), future_truth.end());
    triple.actual_trend = ols_slope(window);

    std::copy(future_pred.begin(), future_pred.end(), window.begin() + n + 1);
    triple.predicted_trend = ols_slope(window);
    return triple;
}

// max(pred - actual, 0)^2 * w_l + max(actual - pred, 0)^2 * w_h
inline double trend_cost(const TrendTriple& triple, const TrendParams& params) {
    const double over = std::max(triple.predicted_trend - triple.actual_trend, 0.0);
    const double under = std::max(triple.actual_trend - triple.predicted_trend, 0.0);
    return over * over * params.weight_over + under * under * params.weight_under;
}

// (expected - actual)^2 * |y - y_hat|: the trend-surprise weight times the
// pointwise prediction error.
inline double trend_deviation_cost(const TrendTriple& triple, double y, double y_hat) {
    const double surprise = triple.expected_trend - triple.actual_trend;
    return surprise * surprise * std::abs(y - y_hat);
}

// Gradient of trend_cost with respect to each predicted point, given the
// slope coefficients of those points (see predicted_point_slope_weights).
inline std::vector<double> trend_cost_gradient(const TrendTriple& triple, const TrendParams& params,
                                               std::span<const double> slope_weights) {
    const double over = std::max(triple.predicted_trend - triple.actual_trend, 0.0);
    const double under = std::max(triple.actual_trend - triple.predicted_trend, 0.0);
    const double common = 2.0 * over * params.weight_over - 2.0 * under * params.weight_under;
    std::vector<double> grad(slope_weights.size());
    for (std::size_t j = 0; j < slope_weights.size(); ++j) grad[j] = common * slope_weights[j];
    return grad;
}

// Subgradient of trend_deviation_cost with respect to y_hat; the trend
// factor contains truth only. sign(0) = 0 at the kink.
inline double trend_dev_cost_subgradient(const TrendTriple& triple, double y, double y_hat) {
    const double surprise = triple.expected_trend - triple.actual_trend;
    return -(surprise * surprise) * sign_of(y - y_hat);
}

// Dataset-level means of the three costs for one truth/prediction pair.
// Each component reports the count of points where it was computable; a
// zero count means the component is absent (mean reported as 0).
struct UtilityBreakdown {
    double mean_range_cost = 0.0;
    double mean_trend_cost = 0.0;
    double mean_trend_dev_cost = 0.0;
    std::size_t count_range = 0;
    std::size_t count_trend = 0;
    std::size_t count_trend_dev = 0;

    bool has_range() const { return count_range > 0; }
    bool has_trend() const { return count_trend > 0; }
    bool has_trend_dev() const { return count_trend_dev > 0; }
};

// Range cost at every aligned index; trend costs at every anchor t with a
// full non-missing lookback and horizon. Windows touching a missing value
// are skipped, never imputed.
inline UtilityBreakdown aggregate(const VitalSeries& truth, const PredictionSeries& prediction,
                                  const NormalRangeParams& range_params,
                                  const TrendParams& trend_params) {
    range_params.validate();
    trend_params.validate();
    const AlignedPair pair = align(truth, prediction);
    if (pair.empty()) throw EmptyAlignment("aggregate over empty alignment");

    UtilityBreakdown out;
    double range_sum = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        range_sum += normal_range_cost(pair.truth_values[i], pair.predicted_values[i], range_params);
        ++out.count_range;
    }

    double trend_sum = 0.0, trend_dev_sum = 0.0;
    for (const auto& tv : truth.values()) {
        const std::int64_t t = tv.index;
        TrendTriple triple;
        try {
            triple = trend_triple(truth, prediction, t, trend_params);
        } catch (const InsufficientHistory&) {
            continue;
        } catch (const InsufficientHorizon&) {
            continue;
        }
        trend_sum += trend_cost(triple, trend_params);
        ++out.count_trend;
        const auto y = truth.value_at(t);
        const auto y_hat = prediction.series.value_at(t);
        if (y && y_hat) {
            trend_dev_sum += trend_deviation_cost(triple, *y, *y_hat);
            ++out.count_trend_dev;
        }
    }

    if (out.count_range > 0) out.mean_range_cost = range_sum / static_cast<double>(out.count_range);
    if (out.count_trend > 0) out.mean_trend_cost = trend_sum / static_cast<double>(out.count_trend);
    if (out.count_trend_dev > 0)
        out.mean_trend_dev_cost = trend_dev_sum / static_cast<double>(out.count_trend_dev);
    return out;
}

}  // namespace vitalcast
