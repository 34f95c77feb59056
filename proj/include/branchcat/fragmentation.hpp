#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "branchcat/errors.hpp"
#include "branchcat/rng.hpp"
#include "branchcat/special.hpp"
#include "branchcat/util.hpp"

namespace branchcat {

// Distribution of the surviving fraction Theta in (0, 1] applied at each
// catastrophe. Every family gives closed-form moments E[Theta^u] and
// E[Theta^tau * ln Theta], which the criterion functions and decay-rate
// bounds consume; divergent moments surface as InfiniteMomentError rather
// than an infinity that could propagate into comparisons.
enum class KernelKind : std::uint8_t { atom, discrete, uniform, beta };

class FragmentationKernel {
  public:
    static FragmentationKernel atom(double theta0) {
        if (!(theta0 > 0.0 && theta0 <= 1.0))
            throw std::invalid_argument("kernel atom: theta0 must lie in (0, 1]");
        FragmentationKernel k;
        k.kind_ = KernelKind::atom;
        k.theta0_ = theta0;
        return k;
    }

    // (theta_i, w_i) with w_i > 0 summing to 1
    static FragmentationKernel discrete(std::vector<std::pair<double, double>> atoms) {
        if (atoms.empty()) throw std::invalid_argument("kernel discrete: no atoms");
        double wsum = 0.0;
        for (const auto& [th, w] : atoms) {
            if (!(th > 0.0 && th <= 1.0))
                throw std::invalid_argument("kernel discrete: every theta must lie in (0, 1]");
            if (!(w > 0.0)) throw std::invalid_argument("kernel discrete: weights must be > 0");
            wsum += w;
        }
        if (std::fabs(wsum - 1.0) > 1e-12)
            throw std::invalid_argument("kernel discrete: weights must sum to 1 (got " +
                                        fmt_double(wsum) + ")");
        FragmentationKernel k;
        k.kind_ = KernelKind::discrete;
        k.atoms_ = std::move(atoms);
        return k;
    }

    static FragmentationKernel uniform() {
        FragmentationKernel k;
        k.kind_ = KernelKind::uniform;
        return k;
    }

    static FragmentationKernel beta(double alpha, double beta_) {
        if (!(alpha > 0.0 && beta_ > 0.0))
            throw std::invalid_argument("kernel beta: alpha and beta must be > 0");
        FragmentationKernel k;
        k.kind_ = KernelKind::beta;
        k.alpha_ = alpha;
        k.beta_ = beta_;
        return k;
    }

    KernelKind kind() const { return kind_; }

    bool moment_finite(double u) const {
        switch (kind_) {
            case KernelKind::atom:
            case KernelKind::discrete:
                return true;
            case KernelKind::uniform:
                return u > -1.0;
            case KernelKind::beta:
                return alpha_ + u > 0.0;
        }
        return false;
    }

    // E[Theta^u]
    double moment(double u) const {
        if (!moment_finite(u))
            throw InfiniteMomentError("kernel moment E[Theta^" + fmt_double(u) +
                                      "] diverges for " + to_string());
        switch (kind_) {
            case KernelKind::atom:
                return std::pow(theta0_, u);
            case KernelKind::discrete: {
                double s = 0.0;
                for (const auto& [th, w] : atoms_) s += w * std::pow(th, u);
                return s;
            }
            case KernelKind::uniform:
                return 1.0 / (u + 1.0);
            case KernelKind::beta:
                return std::exp(log_beta(alpha_ + u, beta_) - log_beta(alpha_, beta_));
        }
        return 0.0;
    }

    // E[Theta^tau * ln Theta]; tau = 0 gives E[ln Theta].
    double log_moment(double tau) const {
        if (!moment_finite(tau))
            throw InfiniteMomentError("kernel log-moment at tau=" + fmt_double(tau) +
                                      " diverges for " + to_string());
        switch (kind_) {
            case KernelKind::atom:
                return std::pow(theta0_, tau) * std::log(theta0_);
            case KernelKind::discrete: {
                double s = 0.0;
                for (const auto& [th, w] : atoms_) s += w * std::pow(th, tau) * std::log(th);
                return s;
            }
            case KernelKind::uniform: {
                const double q = tau + 1.0;
                return -1.0 / (q * q);
            }
            case KernelKind::beta:
                return moment(tau) * (digamma(alpha_ + tau) - digamma(alpha_ + beta_ + tau));
        }
        return 0.0;
    }

    double mean_log() const { return log_moment(0.0); }

    double sample(RngStream& rng) const {
        switch (kind_) {
            case KernelKind::atom:
                return theta0_;
            case KernelKind::discrete: {
                double u = rng.uniform01();
                for (const auto& [th, w] : atoms_) {
                    if (u <= w) return th;
                    u -= w;
                }
                return atoms_.back().first;  // guards rounding at u ~ 1
            }
            case KernelKind::uniform:
                return rng.uniform01();
            case KernelKind::beta: {
                const double ga = sample_gamma(alpha_, rng);
                const double gb = sample_gamma(beta_, rng);
                return ga / (ga + gb);
            }
        }
        return 1.0;
    }

    std::string to_string() const {
        switch (kind_) {
            case KernelKind::atom:
                return "atom(" + fmt_double(theta0_) + ")";
            case KernelKind::discrete: {
                std::string s = "discrete(";
                for (std::size_t i = 0; i < atoms_.size(); ++i) {
                    if (i) s += ",";
                    s += "(" + fmt_double(atoms_[i].first) + "," + fmt_double(atoms_[i].second) + ")";
                }
                return s + ")";
            }
            case KernelKind::uniform:
                return "uniform";
            case KernelKind::beta:
                return "beta(" + fmt_double(alpha_) + "," + fmt_double(beta_) + ")";
        }
        return "atom(1)";
    }

    bool operator==(const FragmentationKernel& o) const {
        return kind_ == o.kind_ && theta0_ == o.theta0_ && atoms_ == o.atoms_ &&
               alpha_ == o.alpha_ && beta_ == o.beta_;
    }

  private:
    // Marsaglia-Tsang squeeze for Gamma(shape, 1); shape < 1 boosted through
    // Gamma(shape + 1) * U^(1/shape).
    static double sample_gamma(double shape, RngStream& rng) {
        if (shape < 1.0) {
            const double u = rng.uniform01();
            return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = rng.normal();
            const double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = rng.uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    KernelKind kind_ = KernelKind::atom;
    double theta0_ = 0.5;
    std::vector<std::pair<double, double>> atoms_;
    double alpha_ = 1.0, beta_ = 1.0;
};

}  // namespace branchcat
