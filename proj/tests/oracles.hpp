#pragma once

// Test-only reference implementations. These deliberately recompute results
// through independent code paths (straightforward loops, closed forms,
// central finite differences) so the library implementations are checked
// against something other than themselves.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracles {

// Straight one-pass RMSE recomputation.
inline double reference_rmse(const std::vector<double>& truth, const std::vector<double>& pred) {
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        acc += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

// Closed-form OLS slope: sum((x - xbar)(y - ybar)) / sum((x - xbar)^2).
inline double reference_ols_slope(std::span<const double> ys) {
    const std::size_t n = ys.size();
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xbar += static_cast<double>(i);
        ybar += ys[i];
    }
    xbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xbar;
        num += dx * (ys[i] - ybar);
        den += dx * dx;
    }
    return num / den;
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative agreement with an absolute floor for near-zero pairs.
inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-12) {
    const double diff = std::abs(a - b);
    if (diff <= abs_floor) return true;
    return diff <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace oracles
