#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "branchcat/model.hpp"
#include "branchcat/util.hpp"

namespace branchcat {

enum class ClauseStatus : std::uint8_t { pass, fail, heuristic_pass, heuristic_fail };

inline const char* to_string(ClauseStatus s) {
    switch (s) {
        case ClauseStatus::pass: return "pass";
        case ClauseStatus::fail: return "fail";
        case ClauseStatus::heuristic_pass: return "heuristic-pass";
        case ClauseStatus::heuristic_fail: return "heuristic-fail";
    }
    return "?";
}

struct Clause {
    std::string name;
    ClauseStatus status;
    std::string detail;
};

struct ValidationReport {
    std::vector<Clause> clauses;
    bool ok() const {
        for (const auto& c : clauses)
            if (c.status == ClauseStatus::fail || c.status == ClauseStatus::heuristic_fail)
                return false;
        return true;
    }
};

namespace detail {

// Regularity clauses (Lipschitz, Holder-1/2, the x(1 - ln x) modulus for g)
// cannot be decided from finitely many samples, so they are *screened*: take
// difference quotients |f(y) - f(x)| / modulus(y - x) on consecutive grid
// pairs in the lower half of the grid and fit the slope of ln q against
// ln x. A clearly negative slope means the quotient blows up toward 0 and
// the clause is reported heuristic-fail; otherwise heuristic-pass. Either
// way it is labeled as grid evidence, not proof.
template <class Fn, class Modulus>
Clause quotient_clause(const std::string& name, Fn&& f, Modulus&& modulus,
                       const std::vector<double>& grid) {
    std::vector<double> lx, lq;
    if (grid.size() >= 3) {
        const double scale_split = std::sqrt(grid.front() * grid.back());
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double x = grid[i], y = grid[i + 1];
            if (!(y > x) || y > scale_split) continue;
            const double den = modulus(y - x);
            if (!(den > 0.0)) continue;
            const double q = std::fabs(f(y) - f(x)) / den;
            if (!(q > 0.0)) continue;
            lx.push_back(std::log(y));
            lq.push_back(std::log(q));
        }
    }
    if (lx.size() < 4)
        return {name, ClauseStatus::heuristic_pass,
                "insufficient grid resolution for the quotient screen"};
    const double qmin = *std::min_element(lq.begin(), lq.end());
    const double qmax = *std::max_element(lq.begin(), lq.end());
    if (qmax - qmin < std::log(2.0))
        return {name, ClauseStatus::heuristic_pass, "difference quotients flat on grid"};
    // OLS slope of ln q on ln x
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += lq[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (lq[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    const std::string det = "quotient growth exponent toward 0: " + fmt_double(slope);
    if (slope < -0.05) return {name, ClauseStatus::heuristic_fail, det};
    return {name, ClauseStatus::heuristic_pass, det};
}

inline Clause sign_clause(const std::string& name, const CoefficientFn& f,
                          const std::vector<double>& grid) {
    for (double x : grid) {
        const double v = f(x);
        if (!(v >= 0.0))
            return {name, ClauseStatus::fail,
                    "negative value " + fmt_double(v) + " at x = " + fmt_double(x)};
    }
    return {name, ClauseStatus::pass, "nonnegative at all grid points"};
}

}  // namespace detail

// Screens the standing assumptions on (g, sigma2, p, r, pi, kappa) against a
// grid. Exact clauses (values at 0, moment finiteness) are pass/fail; sampled
// regularity clauses are heuristic-pass/heuristic-fail.
inline ValidationReport validate_assumptions(const ModelSpec& m, const std::vector<double>& grid_in) {
    std::vector<double> grid = grid_in;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty() || grid.front() <= 0.0)
        throw std::invalid_argument("validate_assumptions: grid must be positive");

    ValidationReport rep;
    const auto exact0 = [&](const char* name, double v) {
        if (v == 0.0)
            rep.clauses.push_back({name, ClauseStatus::pass, ""});
        else
            rep.clauses.push_back({name, ClauseStatus::fail, "value at 0 is " + fmt_double(v)});
    };

    exact0("g(0) = 0", m.g(0.0));
    // modulus x(1 - ln x) for x <= 1, constant 1 beyond
    const auto phi = [](double h) { return h <= 1.0 ? h * (1.0 - std::log(h)) : 1.0; };
    rep.clauses.push_back(detail::quotient_clause(
        "g has modulus of continuity x(1 - ln x)", [&](double x) { return m.g(x); }, phi, grid));

    exact0("sigma(0) = 0 (via sigma2)", m.sigma2(0.0));
    rep.clauses.push_back(detail::sign_clause("sigma2 >= 0 on grid", m.sigma2, grid));
    rep.clauses.push_back(detail::quotient_clause(
        "sigma is Holder continuous with exponent 1/2",
        [&](double x) { return std::sqrt(std::max(m.sigma2(x), 0.0)); },
        [](double h) { return std::sqrt(h); }, grid));

    exact0("p(0) = 0", m.p(0.0));
    rep.clauses.push_back(detail::sign_clause("p >= 0 on grid", m.p, grid));
    rep.clauses.push_back(detail::quotient_clause(
        "p locally Lipschitz", [&](double x) { return m.p(x); }, [](double h) { return h; },
        grid));
    {
        Clause c{"p non-decreasing", ClauseStatus::pass, ""};
        switch (m.p.nondecreasing()) {
            case CoefficientFn::Mono::yes:
                c.detail = "monotone by family parameters";
                break;
            case CoefficientFn::Mono::no:
                c.status = ClauseStatus::fail;
                c.detail = "family parameters force a decrease";
                break;
            case CoefficientFn::Mono::grid: {
                c.status = ClauseStatus::heuristic_pass;
                c.detail = "non-decreasing at all grid points";
                for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
                    if (m.p(grid[i + 1]) < m.p(grid[i])) {
                        c.status = ClauseStatus::fail;
                        c.detail = "decreases between x = " + fmt_double(grid[i]) + " and " +
                                   fmt_double(grid[i + 1]);
                        break;
                    }
                }
                break;
            }
        }
        rep.clauses.push_back(std::move(c));
    }

    {
        const double r0 = m.r(0.0);
        rep.clauses.push_back(std::isfinite(r0)
                                  ? Clause{"r(0) finite", ClauseStatus::pass,
                                           "r(0) = " + fmt_double(r0)}
                                  : Clause{"r(0) finite", ClauseStatus::fail, "r(0) diverges"});
    }
    rep.clauses.push_back(detail::sign_clause("r >= 0 on grid", m.r, grid));
    rep.clauses.push_back(detail::quotient_clause(
        "r locally Lipschitz", [&](double x) { return m.r(x); }, [](double h) { return h; },
        grid));

    rep.clauses.push_back(m.pi.m1_finite()
                              ? Clause{"jump measure integrates min(z, z^2)", ClauseStatus::pass,
                                       ""}
                              : Clause{"jump measure integrates min(z, z^2)", ClauseStatus::fail,
                                       "tail of " + m.pi.to_string() + " is too heavy"});
    rep.clauses.push_back({"kernel supported in (0, 1] with finite E|ln Theta|",
                           ClauseStatus::pass, "guaranteed by family construction"});
    return rep;
}

}  // namespace branchcat
