#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "branchcat/errors.hpp"
#include "branchcat/quadrature.hpp"
#include "branchcat/rng.hpp"
#include "branchcat/special.hpp"
#include "branchcat/util.hpp"

namespace branchcat {

// Finite positive-jump measure pi on (0, inf). Jumps arrive at state rate
// p(x) * m0 with sizes drawn from pi / m0; the drift compensates p(x) * m1.
//
// Integrals against the density families are evaluated in CDF space:
// integral f dpi = m0 * integral_0^1 f(z(u)) du with z(u) the quantile map,
// so the measure factor is handled exactly and only f is left to the
// adaptive rule. Moments m0, m1, m2, mlog are closed forms except the
// truncated-power mlog, which has no elementary antiderivative and is
// delegated to the same certified quadrature at 1e-12.
enum class JumpKind : std::uint8_t { zero, atoms, exponential, trpower };

class JumpMeasure {
  public:
    JumpMeasure() = default;  // zero measure

    static JumpMeasure zero() { return {}; }

    // (z_i, w_i): atom positions and masses (not probabilities)
    static JumpMeasure atoms(std::vector<std::pair<double, double>> zs) {
        if (zs.empty()) throw std::invalid_argument("jump atoms: no atoms");
        for (const auto& [z, w] : zs) {
            if (!(z > 0.0)) throw std::invalid_argument("jump atoms: sizes must be > 0");
            if (!(w > 0.0)) throw std::invalid_argument("jump atoms: masses must be > 0");
        }
        JumpMeasure m;
        m.kind_ = JumpKind::atoms;
        m.atoms_ = std::move(zs);
        return m;
    }

    // mass * rate * exp(-rate z) dz on (0, inf)
    static JumpMeasure exponential(double mass, double rate) {
        if (!(mass >= 0.0)) throw std::invalid_argument("jump exponential: mass must be >= 0");
        if (!(rate > 0.0)) throw std::invalid_argument("jump exponential: rate must be > 0");
        JumpMeasure m;
        m.kind_ = mass == 0.0 ? JumpKind::zero : JumpKind::exponential;
        m.mass_ = mass;
        m.rate_ = rate;
        return m;
    }

    // C z^-expo dz on [z_min, z_max], C normalized so total mass = mass.
    // z_max = inf allowed when expo > 1.
    static JumpMeasure trpower(double mass, double expo, double z_min, double z_max) {
        if (!(mass >= 0.0)) throw std::invalid_argument("jump trpower: mass must be >= 0");
        if (!(z_min > 0.0)) throw std::invalid_argument("jump trpower: z_min must be > 0");
        const bool inf_tail = std::isinf(z_max);
        if (!inf_tail && !(z_max > z_min))
            throw std::invalid_argument("jump trpower: z_max must exceed z_min");
        if (inf_tail && !(expo > 1.0))
            throw std::invalid_argument("jump trpower: unbounded support needs exponent > 1");
        JumpMeasure m;
        m.kind_ = mass == 0.0 ? JumpKind::zero : JumpKind::trpower;
        m.mass_ = mass;
        m.expo_ = expo;
        m.zmin_ = z_min;
        m.zmax_ = z_max;
        return m;
    }

    JumpKind kind() const { return kind_; }
    bool is_zero() const { return kind_ == JumpKind::zero; }

    double m0() const {
        switch (kind_) {
            case JumpKind::zero:
                return 0.0;
            case JumpKind::atoms: {
                double s = 0.0;
                for (const auto& [z, w] : atoms_) s += w;
                return s;
            }
            default:
                return mass_;
        }
    }

    bool m1_finite() const {
        return kind_ != JumpKind::trpower || !std::isinf(zmax_) || expo_ > 2.0;
    }
    bool m2_finite() const {
        return kind_ != JumpKind::trpower || !std::isinf(zmax_) || expo_ > 3.0;
    }

    // integral z dpi
    double m1() const {
        switch (kind_) {
            case JumpKind::zero:
                return 0.0;
            case JumpKind::atoms: {
                double s = 0.0;
                for (const auto& [z, w] : atoms_) s += w * z;
                return s;
            }
            case JumpKind::exponential:
                return mass_ / rate_;
            case JumpKind::trpower:
                if (!m1_finite())
                    throw InfiniteMomentError("jump measure m1 diverges: " + to_string());
                return mass_ * power_ratio(1.0);
        }
        return 0.0;
    }

    // integral z^2 dpi
    double m2() const {
        switch (kind_) {
            case JumpKind::zero:
                return 0.0;
            case JumpKind::atoms: {
                double s = 0.0;
                for (const auto& [z, w] : atoms_) s += w * z * z;
                return s;
            }
            case JumpKind::exponential:
                return 2.0 * mass_ / (rate_ * rate_);
            case JumpKind::trpower:
                if (!m2_finite())
                    throw InfiniteMomentError("jump measure m2 diverges: " + to_string());
                return mass_ * power_ratio(2.0);
        }
        return 0.0;
    }

    // integral ln(1+z) dpi
    double mlog() const {
        switch (kind_) {
            case JumpKind::zero:
                return 0.0;
            case JumpKind::atoms: {
                double s = 0.0;
                for (const auto& [z, w] : atoms_) s += w * std::log1p(z);
                return s;
            }
            case JumpKind::exponential:
                return mass_ * std::exp(rate_) * expint_e1(rate_);
            case JumpKind::trpower:
                return integrate([](double z) { return std::log1p(z); }, 1e-12);
        }
        return 0.0;
    }

    // integral f(z) pi(dz); exact sums for atoms, CDF-space quadrature else.
    template <class F>
    double integrate(F&& f, double rel_tol = 1e-10) const {
        switch (kind_) {
            case JumpKind::zero:
                return 0.0;
            case JumpKind::atoms: {
                double s = 0.0;
                for (const auto& [z, w] : atoms_) s += w * f(z);
                return s;
            }
            default:
                return m0() * quad::integrate([&](double u) { return f(quantile(u)); }, 0.0,
                                              1.0, rel_tol);
        }
    }

    // z at CDF level u in (0, 1) of the normalized measure
    double quantile(double u) const {
        switch (kind_) {
            case JumpKind::exponential:
                return -std::log1p(-u) / rate_;
            case JumpKind::trpower: {
                if (expo_ == 1.0) return zmin_ * std::pow(zmax_ / zmin_, u);
                const double q = 1.0 - expo_;
                const double top = std::isinf(zmax_) ? 0.0 : std::pow(zmax_, q);
                return std::pow(std::pow(zmin_, q) * (1.0 - u) + top * u, 1.0 / q);
            }
            case JumpKind::atoms: {
                const double total = m0();
                double acc = 0.0;
                for (const auto& [z, w] : atoms_) {
                    acc += w;
                    if (u * total <= acc) return z;
                }
                return atoms_.back().first;
            }
            case JumpKind::zero:
                break;
        }
        throw std::domain_error("quantile of the zero jump measure");
    }

    double sample(RngStream& rng) const { return quantile(rng.uniform01()); }

    std::string to_string() const {
        switch (kind_) {
            case JumpKind::zero:
                return "zero";
            case JumpKind::atoms: {
                std::string s = "atoms(";
                for (std::size_t i = 0; i < atoms_.size(); ++i) {
                    if (i) s += ",";
                    s += "(" + fmt_double(atoms_[i].first) + "," + fmt_double(atoms_[i].second) + ")";
                }
                return s + ")";
            }
            case JumpKind::exponential:
                return "exponential(" + fmt_double(mass_) + "," + fmt_double(rate_) + ")";
            case JumpKind::trpower:
                return "trpower(" + fmt_double(mass_) + "," + fmt_double(expo_) + "," +
                       fmt_double(zmin_) + "," + (std::isinf(zmax_) ? "inf" : fmt_double(zmax_)) +
                       ")";
        }
        return "zero";
    }

    bool operator==(const JumpMeasure& o) const {
        return kind_ == o.kind_ && atoms_ == o.atoms_ && mass_ == o.mass_ && rate_ == o.rate_ &&
               expo_ == o.expo_ && zmin_ == o.zmin_ && zmax_ == o.zmax_;
    }

  private:
    // integral z^s z^-expo / integral z^-expo over the support
    double power_ratio(double s) const {
        const auto seg = [&](double q) -> double {
            // integral_{zmin}^{zmax} z^q dz
            if (q == -1.0) return std::log(zmax_ / zmin_);
            if (std::isinf(zmax_)) return -std::pow(zmin_, q + 1.0) / (q + 1.0);
            return (std::pow(zmax_, q + 1.0) - std::pow(zmin_, q + 1.0)) / (q + 1.0);
        };
        return seg(s - expo_) / seg(-expo_);
    }

    JumpKind kind_ = JumpKind::zero;
    std::vector<std::pair<double, double>> atoms_;
    double mass_ = 0.0, rate_ = 1.0;
    double expo_ = 2.0, zmin_ = 1.0, zmax_ = 2.0;
};

struct JumpFunctionals {
    double m0, m1, m2, mlog;
};

// All four headline moments at once; throws InfiniteMomentError if any of
// them diverges (callers that can live with infinite m2 use the individual
// accessors instead).
inline JumpFunctionals jump_functionals(const JumpMeasure& pi) {
    return {pi.m0(), pi.m1(), pi.m2(), pi.mlog()};
}

}  // namespace branchcat
