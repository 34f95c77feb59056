#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchcat/util.hpp"

namespace branchcat {

// Scalar coefficient on [0, inf) drawn from a closed set of families, so that
// models are fully described by (family, parameters) and serialize exactly.
enum class CoefKind : std::uint8_t { zero, linear, power, affine, logistic, table };

class CoefficientFn {
  public:
    CoefficientFn() = default;  // zero

    static CoefficientFn zero() { return {}; }

    static CoefficientFn linear(double c) {
        CoefficientFn f;
        f.kind_ = CoefKind::linear;
        f.c0_ = c;
        return f;
    }

    // c * x^beta
    static CoefficientFn power(double c, double beta) {
        CoefficientFn f;
        f.kind_ = CoefKind::power;
        f.c0_ = c;
        f.c1_ = beta;
        return f;
    }

    // c0 + c1 * x
    static CoefficientFn affine(double c0, double c1) {
        CoefficientFn f;
        f.kind_ = CoefKind::affine;
        f.c0_ = c0;
        f.c1_ = c1;
        return f;
    }

    // c * x * (1 - x/k), logistic drift with capacity k
    static CoefficientFn logistic(double c, double k) {
        if (!(k > 0.0)) throw std::invalid_argument("logistic: capacity k must be > 0");
        CoefficientFn f;
        f.kind_ = CoefKind::logistic;
        f.c0_ = c;
        f.c1_ = k;
        return f;
    }

    // Piecewise-linear interpolation through (x_i, y_i); clamped outside.
    static CoefficientFn table(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.size() < 2)
            throw std::invalid_argument("table: need >= 2 nodes with matching x/y");
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            if (!(xs[i] < xs[i + 1]))
                throw std::invalid_argument("table: x nodes must be strictly increasing");
        if (xs.front() < 0.0) throw std::invalid_argument("table: x nodes must be >= 0");
        CoefficientFn f;
        f.kind_ = CoefKind::table;
        f.xs_ = std::move(xs);
        f.ys_ = std::move(ys);
        return f;
    }

    double operator()(double x) const {
        switch (kind_) {
            case CoefKind::zero:
                return 0.0;
            case CoefKind::linear:
                return c0_ * x;
            case CoefKind::power:
                if (c1_ == 2.0) return c0_ * x * x;
                if (c1_ == 1.0) return c0_ * x;
                return c0_ * std::pow(x, c1_);
            case CoefKind::affine:
                return c0_ + c1_ * x;
            case CoefKind::logistic:
                return c0_ * x * (1.0 - x / c1_);
            case CoefKind::table: {
                if (x <= xs_.front()) return ys_.front();
                if (x >= xs_.back()) return ys_.back();
                const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
                const auto i = static_cast<std::size_t>(it - xs_.begin());
                const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
                return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
            }
        }
        return 0.0;
    }

    CoefKind kind() const { return kind_; }
    bool is_zero() const { return kind_ == CoefKind::zero; }
    double param0() const { return c0_; }
    double param1() const { return c1_; }
    const std::vector<double>& table_x() const { return xs_; }
    const std::vector<double>& table_y() const { return ys_; }

    // Analytic monotonicity where the family settles it; table/logistic fall
    // back to the caller's grid check.
    enum class Mono { yes, no, grid };
    Mono nondecreasing() const {
        switch (kind_) {
            case CoefKind::zero:
                return Mono::yes;
            case CoefKind::linear:
                return c0_ >= 0.0 ? Mono::yes : Mono::no;
            case CoefKind::power:
                if (c0_ == 0.0 || c1_ == 0.0) return Mono::yes;
                return (c0_ > 0.0) == (c1_ > 0.0) ? Mono::yes : Mono::no;
            case CoefKind::affine:
                return c1_ >= 0.0 ? Mono::yes : Mono::no;
            default:
                return Mono::grid;
        }
    }

    std::string to_string() const {
        switch (kind_) {
            case CoefKind::zero:
                return "zero";
            case CoefKind::linear:
                return "linear(" + fmt_double(c0_) + ")";
            case CoefKind::power:
                return "power(" + fmt_double(c0_) + "," + fmt_double(c1_) + ")";
            case CoefKind::affine:
                return "affine(" + fmt_double(c0_) + "," + fmt_double(c1_) + ")";
            case CoefKind::logistic:
                return "logistic(" + fmt_double(c0_) + "," + fmt_double(c1_) + ")";
            case CoefKind::table: {
                std::string s = "table(";
                for (std::size_t i = 0; i < xs_.size(); ++i) {
                    if (i) s += ",";
                    s += "(" + fmt_double(xs_[i]) + "," + fmt_double(ys_[i]) + ")";
                }
                return s + ")";
            }
        }
        return "zero";
    }

    bool operator==(const CoefficientFn& o) const {
        return kind_ == o.kind_ && c0_ == o.c0_ && c1_ == o.c1_ && xs_ == o.xs_ && ys_ == o.ys_;
    }

  private:
    CoefKind kind_ = CoefKind::zero;
    double c0_ = 0.0, c1_ = 0.0;
    std::vector<double> xs_, ys_;
};

}  // namespace branchcat
