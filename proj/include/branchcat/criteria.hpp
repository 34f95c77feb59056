#pragma once

#include <cmath>
#include <string>

#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"

namespace branchcat {

// Criterion functions driving the regime classification. For a != 1,
//
//   G_a(x) = (a-1) * ( g(x)/x - a sigma2(x)/x^2
//                      - r(x) (1 - E[Theta^(1-a)]) / (1-a)
//                      - p(x) I_a(x) ),
//
// with I_a the jump-tail functional below; the a -> 1 limit of G_a/(a-1) is
//
//   H(x) = g(x)/x - sigma2(x)/x^2 + r(x) E[ln Theta] - p(x) I(x).
//
// Both are reported with their four signed contributions so that CSV rows
// and regime margins can attribute the verdict to a mechanism.

inline double kernel_moment(const FragmentationKernel& k, double u) { return k.moment(u); }
inline double kernel_log_moment(const FragmentationKernel& k, double tau) { return k.log_moment(tau); }

// a belongs to the admissible exponent set: a > 1 with E[Theta^(1-a)] finite.
inline bool in_moment_set(const FragmentationKernel& k, double a) {
    return a > 1.0 && k.moment_finite(1.0 - a);
}

namespace detail {

// Integrand of I_a per unit jump mass at w = z/x:
//   f_a(w) = w + (1 - (1+w)^(1-a)) / (1-a)  >= 0.
// Near w = 0 the two leading orders cancel (f_a ~ a w^2 / 2), so small w uses
// the series; elsewhere expm1/log1p keep full precision.
inline double tail_integrand_a(double w, double a) {
    if (w < 1e-3) {
        const double c3 = (a + 1.0) / 3.0;
        const double c4 = (a + 1.0) * (a + 2.0) / 12.0;
        const double c5 = (a + 1.0) * (a + 2.0) * (a + 3.0) / 60.0;
        return 0.5 * a * w * w * (1.0 - w * (c3 - w * (c4 - w * c5)));
    }
    const double b = 1.0 - a;
    return w + std::expm1(b * std::log1p(w)) / (-b);
}

// a -> 1 limit: f(w) = w - log1p(w) >= 0, same cancellation guard.
inline double tail_integrand_1(double w) {
    if (w < 1e-3)
        return w * w * (0.5 - w * (1.0 / 3.0 - w * (0.25 - w * 0.2)));
    return w - std::log1p(w);
}

inline void check_x(double x) {
    if (!(x > 0.0)) throw std::domain_error("criterion functions need x > 0");
}

inline void check_a(double a) {
    if (!(a > 0.0)) throw std::domain_error("criterion exponent a must be > 0");
    if (std::fabs(a - 1.0) < 1e-6)
        throw std::domain_error(
            "a is inside the removable singularity window |a-1| < 1e-6; evaluate the limit "
            "functions (eval_H / eval_I) instead");
}

}  // namespace detail

// I_a(x) = integral of f_a(z/x) pi(dz); exact for atoms, adaptive elsewhere.
inline double eval_I_a(const ModelSpec& m, double x, double a) {
    detail::check_x(x);
    detail::check_a(a);
    if (!m.pi.m1_finite())
        throw InfiniteMomentError("I_a diverges: jump measure has no first moment");
    return m.pi.integrate([&](double z) { return detail::tail_integrand_a(z / x, a); });
}

// I(x) = integral of (z/x - ln(1 + z/x)) pi(dz) >= 0.
inline double eval_I(const ModelSpec& m, double x) {
    detail::check_x(x);
    if (!m.pi.m1_finite())
        throw InfiniteMomentError("I diverges: jump measure has no first moment");
    return m.pi.integrate([&](double z) { return detail::tail_integrand_1(z / x); });
}

struct CriterionTerms {
    double growth, diffusion, catastrophe, jump;
};

struct CriterionPoint {
    double x;
    double a;  // 1 marks the limit function H
    double value;
    CriterionTerms terms;  // signed contributions, summing to value
};

inline CriterionPoint eval_G_a(const ModelSpec& m, double x, double a) {
    detail::check_x(x);
    detail::check_a(a);
    if (a > 1.0 && !m.kappa.moment_finite(1.0 - a))
        throw InfiniteMomentError("a = " + fmt_double(a) +
                                  " lies outside the admissible set: E[Theta^(1-a)] diverges for " +
                                  m.kappa.to_string());
    const double kmom = m.kappa.moment(1.0 - a);
    const double am1 = a - 1.0;
    CriterionPoint pt{};
    pt.x = x;
    pt.a = a;
    pt.terms.growth = am1 * m.g(x) / x;
    pt.terms.diffusion = -am1 * a * m.sigma2(x) / (x * x);
    // (a-1) * ( -r (1 - kmom)/(1-a) ) collapses to r (1 - kmom)
    pt.terms.catastrophe = m.r(x) * (1.0 - kmom);
    const double px = m.p(x);
    pt.terms.jump = px == 0.0 ? 0.0 : -am1 * px * eval_I_a(m, x, a);
    pt.value = pt.terms.growth + pt.terms.diffusion + pt.terms.catastrophe + pt.terms.jump;
    return pt;
}

inline CriterionPoint eval_H(const ModelSpec& m, double x) {
    detail::check_x(x);
    CriterionPoint pt{};
    pt.x = x;
    pt.a = 1.0;
    pt.terms.growth = m.g(x) / x;
    pt.terms.diffusion = -m.sigma2(x) / (x * x);
    pt.terms.catastrophe = m.r(x) * m.kappa.mean_log();
    const double px = m.p(x);
    pt.terms.jump = px == 0.0 ? 0.0 : -px * eval_I(m, x);
    pt.value = pt.terms.growth + pt.terms.diffusion + pt.terms.catastrophe + pt.terms.jump;
    return pt;
}

// Precomputed G_a evaluator for per-substep use (martingale weights): kernel
// moment and jump functionals are resolved once, the call is then arithmetic
// plus (only when p(x) != 0) one jump-tail integral.
class GaEvaluator {
  public:
    GaEvaluator(const ModelSpec& m, double a) : m_(&m), a_(a) {
        detail::check_a(a);
        if (a > 1.0 && !m.kappa.moment_finite(1.0 - a))
            throw InfiniteMomentError("G_a evaluator: a outside the admissible set");
        cat_coef_ = (1.0 - m.kappa.moment(1.0 - a));  // times r(x), already signed
    }

    double operator()(double x) const {
        const double am1 = a_ - 1.0;
        const double px = m_->p(x);
        double v = am1 * (m_->g(x) / x - a_ * m_->sigma2(x) / (x * x));
        v += cat_coef_ * m_->r(x);
        if (px != 0.0) v -= am1 * px * eval_I_a(*m_, x, a_);
        return v;
    }

    double a() const { return a_; }

  private:
    const ModelSpec* m_;
    double a_;
    double cat_coef_;
};

}  // namespace branchcat
