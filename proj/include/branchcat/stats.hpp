#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace branchcat {

struct Interval {
    double lo, hi;
    bool contains(double v) const { return lo <= v && v <= hi; }
};

// Wilson score interval for a binomial proportion (z = 1.96 for 95%).
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.96) {
    if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (ph + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n));
    // rounding can land an epsilon outside [0, 1]; the interval is a probability
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct LineFit {
    double slope, intercept;
    double slope_se;        // standard error of the slope
    Interval slope_ci95;    // slope +- 1.96 se
    double residual_rms;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 3)
        throw std::invalid_argument("fit_line needs matched inputs with at least 3 points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f{};
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.residual_rms = std::sqrt(ss / static_cast<double>(n));
    f.slope_se = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    f.slope_ci95 = {f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se};
    return f;
}

// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace branchcat
