#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "branchcat/errors.hpp"

namespace branchcat {
namespace quad {

// Gauss-Kronrod 7-15 pair on [-1, 1]. The 7-point Gauss rule is embedded in
// the 15-point Kronrod extension, so one batch of 15 evaluations yields both
// the estimate and an error indicator |K15 - G7|.
namespace gk {
inline constexpr double xk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double wk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
// weights of the embedded Gauss rule, attached to xk[1], xk[3], xk[5], xk[7]
inline constexpr double wg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};
}  // namespace gk

template <class F>
double gk15(F&& f, double a, double b, double& err) {
    const double mid = 0.5 * (a + b);
    const double hlf = 0.5 * (b - a);
    const double fc = f(mid);
    double k = gk::wk[7] * fc;
    double g = gk::wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = hlf * gk::xk[i];
        const double fsum = f(mid - dx) + f(mid + dx);
        k += gk::wk[i] * fsum;
        if (i & 1) g += gk::wg[i / 2] * fsum;
    }
    k *= hlf;
    g *= hlf;
    err = std::fabs(k - g);
    if (!std::isfinite(k))
        throw QuadratureError("integrand returned a non-finite value");
    return k;
}

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

// Globally adaptive bisection, worst segment first. Converged when the summed
// error indicator drops under max(abs_floor, rel_tol * |integral|); anything
// still unresolved after max_segments bisections is a hard error, never a
// silently degraded answer.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 double abs_floor = 1e-14, int max_segments = 10000) {
    if (!(b >= a)) throw QuadratureError("integration bounds out of order");
    if (a == b) return 0.0;
    std::priority_queue<Segment> segs;
    double err0 = 0.0;
    double total = gk15(f, a, b, err0);
    double total_err = err0;
    segs.push({a, b, total, err0});
    int n = 1;
    while (total_err > std::max(abs_floor, rel_tol * std::fabs(total))) {
        if (n >= max_segments)
            throw QuadratureError("adaptive quadrature failed to converge after " +
                                  std::to_string(max_segments) + " segments");
        const Segment worst = segs.top();
        segs.pop();
        const double m = 0.5 * (worst.a + worst.b);
        if (!(worst.a < m && m < worst.b))
            throw QuadratureError("interval collapsed below machine resolution");
        double el = 0.0, er = 0.0;
        const double vl = gk15(f, worst.a, m, el);
        const double vr = gk15(f, m, worst.b, er);
        total += vl + vr - worst.value;
        total_err += el + er - worst.error;
        segs.push({worst.a, m, vl, el});
        segs.push({m, worst.b, vr, er});
        ++n;
    }
    return total;
}

}  // namespace quad
}  // namespace branchcat
