#pragma once

#include <cmath>
#include <stdexcept>

namespace branchcat {

// Digamma via the classic shift-and-asymptotic scheme: push the argument
// above 10 with psi(x) = psi(x+1) - 1/x, then use the Stirling-series tail.
// Accurate to ~1e-15 over the positive axis, which is all we need (kernel
// parameters are positive).
inline double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma requires x > 0");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // B_2/2 x^-2, B_4/4 x^-4, ... truncated after x^-12
    double tail = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760))))));
    return acc + std::log(x) - 0.5 * inv - tail;
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Exponential integral E1(x) = -Ei(-x), x > 0.
inline double expint_e1(double x) {
    if (!(x > 0.0)) throw std::domain_error("expint_e1 requires x > 0");
    return -std::expint(-x);
}

}  // namespace branchcat
