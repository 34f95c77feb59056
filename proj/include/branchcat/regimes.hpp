#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "branchcat/criteria.hpp"
#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/stats.hpp"

namespace branchcat {

// Named regime conditions. Every check below is a grid surrogate of an
// asymptotic statement: a "satisfied-on-grid" verdict is numerical evidence,
// never a proof, and each report says so in its caveat field.
enum class ConditionId { SN0, LN0, SN_INF, LN_INF, LSG, LFG, GSG, GFG, GVFG };

inline const char* to_string(ConditionId id) {
    switch (id) {
        case ConditionId::SN0: return "SN0";
        case ConditionId::LN0: return "LN0";
        case ConditionId::SN_INF: return "SN_INF";
        case ConditionId::LN_INF: return "LN_INF";
        case ConditionId::LSG: return "LSG";
        case ConditionId::LFG: return "LFG";
        case ConditionId::GSG: return "GSG";
        case ConditionId::GFG: return "GFG";
        case ConditionId::GVFG: return "GVFG";
    }
    return "?";
}

inline ConditionId parse_condition(const std::string& name) {
    std::string s;
    for (char c : name)
        if (c != '_' && c != '-' && c != ' ') s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "SN0") return ConditionId::SN0;
    if (s == "LN0") return ConditionId::LN0;
    if (s == "SNINF") return ConditionId::SN_INF;
    if (s == "LNINF") return ConditionId::LN_INF;
    if (s == "LSG") return ConditionId::LSG;
    if (s == "LFG") return ConditionId::LFG;
    if (s == "GSG") return ConditionId::GSG;
    if (s == "GFG") return ConditionId::GFG;
    if (s == "GVFG") return ConditionId::GVFG;
    throw ConfigError("unknown condition name: " + name);
}

// Free constants of the conditions. Unset fields fall back to documented
// defaults (slack 0.1; eta 1.0 for LN bounds, 0.01 for LSG/LFG/GFG, 0 for
// GSG/GVFG; thresholds x0/x1 resolved from the grid; r_lower = grid minimum
// of r).
struct ConditionParams {
    std::optional<double> a, eta, x0, x1, r_lower, slack;
};

enum class Verdict { satisfied_on_grid, violated_on_grid };

inline const char* to_string(Verdict v) {
    return v == Verdict::satisfied_on_grid ? "satisfied-on-grid" : "violated-on-grid";
}

struct RegimeReport {
    static constexpr double unset = std::numeric_limits<double>::quiet_NaN();

    ConditionId id{};
    // resolved parameter values; NaN marks a parameter the condition does not use
    double a = unset, eta = unset, x0 = unset, x1 = unset, r_lower = unset, slack = unset;
    std::vector<double> grid_x;   // the points the verdict was judged on
    std::vector<double> margins;  // same length; margin >= 0 means the point passes
    double min_margin = unset;
    Verdict verdict = Verdict::violated_on_grid;
    std::vector<std::string> notes;
    std::string caveat = "numeric surrogate of an asymptotic condition";

    bool satisfied() const { return verdict == Verdict::satisfied_on_grid; }

    std::string params_text() const {
        std::string t;
        auto add = [&](const char* k, double v) {
            if (std::isnan(v)) return;
            if (!t.empty()) t += ", ";
            t += k;
            t += "=";
            t += fmt_double(v);
        };
        add("a", a);
        add("eta", eta);
        add("x0", x0);
        add("x1", x1);
        add("r_lower", r_lower);
        add("slack", slack);
        return t.empty() ? "no parameters" : t;
    }
};

namespace detail {

inline std::vector<double> prep_grid(std::vector<double> grid) {
    if (grid.empty()) throw std::domain_error("condition check needs a non-empty grid");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (!(grid.front() > 0.0)) throw std::domain_error("condition grids must be strictly positive");
    return grid;
}

inline void finalize_report(RegimeReport& rep) {
    if (rep.margins.empty()) {
        rep.min_margin = RegimeReport::unset;
        rep.verdict = Verdict::violated_on_grid;
        return;
    }
    rep.min_margin = *std::min_element(rep.margins.begin(), rep.margins.end());
    rep.verdict = rep.min_margin >= 0.0 ? Verdict::satisfied_on_grid : Verdict::violated_on_grid;
}

inline std::size_t nonneg_prefix(const std::vector<double>& v) {
    std::size_t k = 0;
    while (k < v.size() && v[k] >= 0.0) ++k;
    return k;
}

inline std::size_t nonneg_suffix_start(const std::vector<double>& v) {
    std::size_t k = v.size();
    while (k > 0 && v[k - 1] >= 0.0) --k;
    return k;
}

// Expression g(x)/x - a sigma2(x)/x^2 - p(x) I_a(x), optionally minus the
// catastrophe term r(x)(1 - E[Theta^(1-a)])/(1-a). This is G_a(x)/(a-1).
struct SnLnExpr {
    const ModelSpec* m;
    double a;
    bool with_cat;
    double cat_over_r;  // (1 - E[Theta^(1-a)])/(1-a), precomputed

    SnLnExpr(const ModelSpec& model, double a_, bool cat) : m(&model), a(a_), with_cat(cat), cat_over_r(0.0) {
        if (std::fabs(a - 1.0) < 1e-6)
            throw std::domain_error("condition exponent a too close to 1; the limit case is read off H");
        if (cat) cat_over_r = (1.0 - m->kappa.moment(1.0 - a)) / (1.0 - a);
    }

    double operator()(double x) const {
        double v = m->g(x) / x - a * m->sigma2(x) / (x * x);
        const double px = m->p(x);
        if (px != 0.0) v -= px * eval_I_a(*m, x, a);
        if (with_cat) v -= m->r(x) * cat_over_r;
        return v;
    }
};

inline std::string count_note(const char* what, std::size_t n) {
    return std::string(what) + " (" + std::to_string(n) + (n == 1 ? " point)" : " points)");
}

// ---- SN0 / SN_INF: the expression must stay within slack * |ln x| on the
// grid's extreme decade (one-sided, toward the bad sign for the condition).
inline RegimeReport check_sn(const ModelSpec& m, ConditionId id, double a, double slack,
                             const std::vector<double>& grid) {
    const bool at_zero = id == ConditionId::SN0;
    if (at_zero) {
        if (!(a > 1.0)) throw std::domain_error("SN0 requires a > 1");
        if (!in_moment_set(m.kappa, a))
            throw InfiniteMomentError("SN0: a = " + fmt_double(a) + " is outside the admissible set for " +
                                      m.kappa.to_string());
    } else {
        if (!(a > 0.0 && a < 1.0)) throw std::domain_error("SN_INF requires a in (0,1)");
    }
    if (!(slack > 0.0)) throw std::domain_error("slack must be positive");

    SnLnExpr expr(m, a, /*with_cat=*/!at_zero);
    RegimeReport rep;
    rep.id = id;
    rep.a = a;
    rep.slack = slack;
    if (at_zero) {
        const double hi = grid.front() * 10.0 * (1.0 + 1e-12);
        for (double x : grid) {
            if (x > hi) break;
            rep.grid_x.push_back(x);
            rep.margins.push_back(expr(x) + slack * std::fabs(std::log(x)));
        }
        rep.notes.push_back(count_note("judged on the grid's bottom decade", rep.grid_x.size()));
    } else {
        const double lo = grid.back() / 10.0 * (1.0 - 1e-12);
        for (double x : grid) {
            if (x < lo) continue;
            rep.grid_x.push_back(x);
            rep.margins.push_back(slack * std::fabs(std::log(x)) - expr(x));
        }
        rep.notes.push_back(count_note("judged on the grid's top decade", rep.grid_x.size()));
    }
    finalize_report(rep);
    return rep;
}

// ---- LN0 / LN_INF: the expression must beat an iterated-log bound beyond a
// threshold. Grid points where ln ln is not real are rejected, with a note.
inline RegimeReport check_ln(const ModelSpec& m, ConditionId id, double a, double eta,
                             const ConditionParams& params, const std::vector<double>& grid) {
    const bool at_zero = id == ConditionId::LN0;
    if (at_zero) {
        if (!(a > 0.0 && a < 1.0)) throw std::domain_error("LN0 requires a in (0,1)");
    } else {
        if (!(a > 1.0)) throw std::domain_error("LN_INF requires a > 1");
        if (!in_moment_set(m.kappa, a))
            throw InfiniteMomentError("LN_INF: a = " + fmt_double(a) + " is outside the admissible set for " +
                                      m.kappa.to_string());
    }
    if (!(eta > 0.0)) throw std::domain_error("LN bounds require eta > 0");

    SnLnExpr expr(m, a, /*with_cat=*/!at_zero);
    RegimeReport rep;
    rep.id = id;
    rep.a = a;
    rep.eta = eta;

    // Eligible points: iterated log real. LN0 needs ln(1/x) >= 1, LN_INF needs ln x >= 1.
    std::vector<double> xs;
    std::size_t rejected = 0;
    double largest_rejected = 0.0;
    for (double x : grid) {
        const bool in_scope = at_zero ? (!params.x0 || x <= *params.x0) : (!params.x0 || x > *params.x0);
        if (!in_scope) continue;
        const double l = at_zero ? -std::log(x) : std::log(x);
        if (l >= 1.0) {
            xs.push_back(x);
        } else {
            ++rejected;
            largest_rejected = std::max(largest_rejected, x);
        }
    }
    if (rejected > 0)
        rep.notes.push_back(count_note(at_zero ? "rejected points above exp(-1): ln ln(1/x) not real"
                                               : "rejected points below exp(1): ln ln x not real",
                                       rejected));
    if (xs.empty()) {
        rep.notes.push_back("no usable grid points for this bound");
        finalize_report(rep);
        return rep;
    }

    std::vector<double> margins;
    margins.reserve(xs.size());
    for (double x : xs) {
        const double l = at_zero ? -std::log(x) : std::log(x);
        const double bound = l * std::pow(std::log(l), 1.0 + eta);
        margins.push_back(at_zero ? (-bound - expr(x)) : (expr(x) - bound));
    }

    if (params.x0) {
        rep.x0 = *params.x0;
        rep.grid_x = xs;
        rep.margins = margins;
    } else if (at_zero) {
        // the condition claims x <= x0 for some x0: take the maximal passing prefix
        const std::size_t k = nonneg_prefix(margins);
        if (k == 0) {
            rep.grid_x = xs;
            rep.margins = margins;
            rep.notes.push_back("no passing prefix: the smallest grid point already violates the bound");
        } else {
            rep.x0 = xs[k - 1];
            rep.grid_x.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k));
            rep.margins.assign(margins.begin(), margins.begin() + static_cast<std::ptrdiff_t>(k));
            rep.notes.push_back("x0 resolved from grid: " + fmt_double(rep.x0) + " (" + std::to_string(k) +
                                " of " + std::to_string(xs.size()) + " usable points below it)");
        }
    } else {
        const std::size_t k = nonneg_suffix_start(margins);
        if (k == margins.size()) {
            rep.grid_x = xs;
            rep.margins = margins;
            rep.notes.push_back("no passing suffix: the largest grid point already violates the bound");
        } else {
            rep.x0 = k == 0 ? largest_rejected : xs[k - 1];
            rep.grid_x.assign(xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
            rep.margins.assign(margins.begin() + static_cast<std::ptrdiff_t>(k), margins.end());
            rep.notes.push_back("x0 resolved from grid: " + fmt_double(rep.x0) + " (" +
                                std::to_string(xs.size() - k) + " of " + std::to_string(xs.size()) +
                                " usable points beyond it)");
        }
    }
    finalize_report(rep);
    return rep;
}

// ---- LSG / LFG: sign condition on H beyond/below a threshold.
inline RegimeReport check_local_growth(const ModelSpec& m, ConditionId id, const ConditionParams& params,
                                       const std::vector<double>& grid) {
    const double eta = params.eta.value_or(0.01);
    if (!(eta > 0.0)) throw std::domain_error("LSG/LFG require eta > 0");
    const bool slow = id == ConditionId::LSG;

    RegimeReport rep;
    rep.id = id;
    rep.eta = eta;

    std::vector<double> xs, margins;
    for (double x : grid) {
        if (slow && params.x0 && !(x > *params.x0)) continue;
        if (!slow && params.x1 && !(x < *params.x1)) continue;
        xs.push_back(x);
        const double h = eval_H(m, x).value;
        margins.push_back(slow ? (-eta - h) : (h - eta));
    }
    if (xs.empty()) {
        rep.notes.push_back("no grid points inside the condition's range");
        if (params.x0) rep.x0 = *params.x0;
        if (params.x1) rep.x1 = *params.x1;
        finalize_report(rep);
        return rep;
    }

    if (slow) {
        if (params.x0) {
            rep.x0 = *params.x0;
            rep.grid_x = xs;
            rep.margins = margins;
        } else {
            const std::size_t k = nonneg_suffix_start(margins);
            if (k == margins.size()) {
                rep.grid_x = xs;
                rep.margins = margins;
                rep.notes.push_back("no passing suffix: H(x) > -eta at the largest grid point");
            } else {
                rep.x0 = k == 0 ? 0.0 : xs[k - 1];
                rep.grid_x.assign(xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
                rep.margins.assign(margins.begin() + static_cast<std::ptrdiff_t>(k), margins.end());
                rep.notes.push_back("x0 resolved from grid: " + fmt_double(rep.x0));
            }
        }
    } else {
        if (params.x1) {
            rep.x1 = *params.x1;
            rep.grid_x = xs;
            rep.margins = margins;
        } else {
            const std::size_t k = nonneg_prefix(margins);
            if (k == 0) {
                rep.grid_x = xs;
                rep.margins = margins;
                rep.notes.push_back("no passing prefix: H(x) < eta at the smallest grid point");
            } else {
                rep.x1 = k == xs.size() ? std::numeric_limits<double>::infinity() : xs[k];
                rep.grid_x.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k));
                rep.margins.assign(margins.begin(), margins.begin() + static_cast<std::ptrdiff_t>(k));
                rep.notes.push_back("x1 resolved from grid: " + fmt_double(rep.x1));
            }
        }
    }
    finalize_report(rep);
    return rep;
}

// ---- GSG / GFG / GVFG: global ratio conditions, every grid point judged.
inline RegimeReport check_global_growth(const ModelSpec& m, ConditionId id, const ConditionParams& params,
                                        const std::vector<double>& grid) {
    const double eta = params.eta.value_or(id == ConditionId::GFG ? 0.01 : 0.0);
    if (id == ConditionId::GFG && !(eta > 0.0)) throw std::domain_error("GFG requires eta > 0");
    if (!(eta >= 0.0)) throw std::domain_error("GSG/GVFG require eta >= 0");

    RegimeReport rep;
    rep.id = id;
    rep.eta = eta;

    double r_lower;
    if (params.r_lower) {
        r_lower = *params.r_lower;
        if (!(r_lower > 0.0)) throw std::domain_error("r_lower must be > 0");
    } else {
        r_lower = std::numeric_limits<double>::infinity();
        for (double x : grid) r_lower = std::min(r_lower, m.r(x));
        rep.notes.push_back("r_lower resolved from grid minimum of r: " + fmt_double(r_lower));
    }
    rep.r_lower = r_lower;

    const double mean_log = m.kappa.mean_log();
    if (id == ConditionId::GVFG && !m.pi.m1_finite())
        throw InfiniteMomentError("GVFG jump term needs a finite first jump moment");

    bool noted_zero_r = false, noted_clause = false;
    for (double x : grid) {
        rep.grid_x.push_back(x);
        const double rx = m.r(x);
        if (!(rx > 0.0)) {
            rep.margins.push_back(-std::numeric_limits<double>::infinity());
            if (!noted_zero_r) {
                rep.notes.push_back("r(x) <= 0 at x = " + fmt_double(x) + "; ratio condition undefined there");
                noted_zero_r = true;
            }
            continue;
        }
        const double e0 = m.g(x) / (x * rx) + mean_log;
        double margin;
        if (id == ConditionId::GSG) {
            margin = -eta - e0;
        } else if (id == ConditionId::GFG) {
            margin = e0 - eta;
        } else {
            double v = e0 - 2.0 * m.sigma2(x) / (x * x * rx);
            const double px = m.p(x);
            if (px != 0.0) {
                const double jg = m.pi.integrate([&](double z) {
                    const double w = z / x;
                    return w * w / (1.0 + w);
                });
                v -= px / rx * jg;
            }
            margin = v - eta;
        }
        if (rx < r_lower) {
            margin = std::min(margin, rx - r_lower);
            if (!noted_clause) {
                rep.notes.push_back("r(x) < r_lower at x = " + fmt_double(x) + "; clause r >= r_lower folded into the margin");
                noted_clause = true;
            }
        }
        rep.margins.push_back(margin);
    }
    finalize_report(rep);
    if ((id == ConditionId::GSG || id == ConditionId::GVFG) && !params.eta && rep.satisfied() &&
        rep.min_margin > 0.0)
        rep.notes.push_back("margins support eta up to " + fmt_double(rep.min_margin) + " on this grid");
    return rep;
}

}  // namespace detail

inline RegimeReport check_condition(const ModelSpec& m, ConditionId id, const ConditionParams& params,
                                    const std::vector<double>& grid_in) {
    const std::vector<double> grid = detail::prep_grid(grid_in);

    switch (id) {
        case ConditionId::LSG:
        case ConditionId::LFG:
            return detail::check_local_growth(m, id, params, grid);
        case ConditionId::GSG:
        case ConditionId::GFG:
        case ConditionId::GVFG:
            return detail::check_global_growth(m, id, params, grid);
        default:
            break;
    }

    // SN/LN checks are existential in a: scan defaults unless the caller pins one.
    const bool above = id == ConditionId::SN0 || id == ConditionId::LN_INF;
    std::vector<double> cands;
    if (params.a)
        cands = {*params.a};
    else if (above)
        cands = {1.25, 1.5, 2.0};
    else
        cands = {0.25, 0.5, 0.75};

    auto run_one = [&](double a) {
        if (id == ConditionId::SN0 || id == ConditionId::SN_INF)
            return detail::check_sn(m, id, a, params.slack.value_or(0.1), grid);
        return detail::check_ln(m, id, a, params.eta.value_or(1.0), params, grid);
    };

    RegimeReport best;
    bool have = false;
    std::vector<std::string> scan_lines;
    for (double a : cands) {
        RegimeReport rep;
        try {
            rep = run_one(a);
        } catch (const InfiniteMomentError& e) {
            if (params.a) throw;
            scan_lines.push_back("a=" + fmt_double(a) + " inadmissible (" + e.what() + ")");
            continue;
        }
        const double mm = std::isnan(rep.min_margin) ? -std::numeric_limits<double>::infinity() : rep.min_margin;
        scan_lines.push_back("a=" + fmt_double(a) + ": " + to_string(rep.verdict) + ", min margin " +
                             fmt_double(rep.min_margin));
        const double bm = !have || std::isnan(best.min_margin) ? -std::numeric_limits<double>::infinity()
                                                               : best.min_margin;
        const bool better = !have || (rep.satisfied() && !best.satisfied()) ||
                            (rep.satisfied() == best.satisfied() && mm > bm);
        if (better) {
            best = rep;
            have = true;
        }
    }
    if (!have) {
        best.id = id;
        best.notes.push_back("no admissible a among the scan candidates for " + m.kappa.to_string());
        detail::finalize_report(best);
    }
    if (cands.size() > 1) {
        std::string s = "a-scan:";
        for (const auto& l : scan_lines) s += " [" + l + "]";
        best.notes.push_back(s);
    }
    return best;
}

// ---- Decay-rate bounds under GSG ------------------------------------------

enum class DecayCase { sub, critical, weak, eta_zero };

inline const char* to_string(DecayCase c) {
    switch (c) {
        case DecayCase::sub: return "sub";
        case DecayCase::critical: return "critical";
        case DecayCase::weak: return "weak";
        case DecayCase::eta_zero: return "eta-zero";
    }
    return "?";
}

// Envelope for P(X_t >= eps): C * t^poly_power * exp(exponent * t). The
// exponent is the signed t-coefficient, so negative values mean decay and a
// positive value makes the bound vacuous (flagged, still reported).
struct RateBound {
    DecayCase kind{};
    double eta = 0.0, r_lower = 0.0;
    double exponent = 0.0;
    double poly_power = 0.0;
    double tau = std::numeric_limits<double>::quiet_NaN();
    double tau_residual = std::numeric_limits<double>::quiet_NaN();
    bool vacuous = false;
    std::vector<std::string> notes;
};

inline RateBound decay_rate_bounds(const ModelSpec& m, double eta, double r_lower,
                                   const std::vector<double>& grid = {}) {
    if (!(eta >= 0.0)) throw std::domain_error("decay_rate_bounds needs eta >= 0");
    if (!(r_lower > 0.0)) throw std::domain_error("decay_rate_bounds needs r_lower > 0");

    RateBound rb;
    rb.eta = eta;
    rb.r_lower = r_lower;

    if (!grid.empty()) {
        ConditionParams p;
        p.eta = eta;
        p.r_lower = r_lower;
        const RegimeReport rep = check_condition(m, ConditionId::GSG, p, grid);
        if (!rep.satisfied())
            rb.notes.push_back("warning: GSG violated on the supplied grid (min margin " +
                               fmt_double(rep.min_margin) + "); the bound's hypothesis is not in evidence");
    }

    const double e_log = m.kappa.mean_log();      // E[ln Theta] <= 0
    const double e_inv = -e_log;                  // E[ln(1/Theta)]
    const double e_m = m.kappa.log_moment(1.0) - e_log;  // E[(Theta-1) ln Theta] >= 0

    if (eta == 0.0) {
        rb.kind = DecayCase::eta_zero;
        rb.exponent = 0.0;
        rb.poly_power = -0.5;
    } else if (std::fabs(e_m - eta) <= 1e-12 * std::max(1.0, eta)) {
        rb.kind = DecayCase::critical;
        rb.exponent = r_lower * (e_inv - eta - 0.5);
        rb.poly_power = -0.5;
    } else if (e_m < eta) {
        rb.kind = DecayCase::sub;
        rb.exponent = r_lower * (e_inv - eta - 0.5);
        rb.poly_power = 0.0;
    } else {
        // weak case: root of phi(tau) = E[ln(1/Theta)] - eta + E[Theta^tau ln Theta],
        // increasing on [0,1) with phi(0) = -eta < 0.
        rb.kind = DecayCase::weak;
        auto phi = [&](double tau) { return e_inv - eta + m.kappa.log_moment(tau); };
        double lo = 0.0, hi = 1.0 - 1e-12;
        if (!(phi(hi) > 0.0))
            throw NoRootError("weak-case root finder: phi has no sign change on [0,1)");
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            (phi(mid) < 0.0 ? lo : hi) = mid;
        }
        rb.tau = 0.5 * (lo + hi);
        rb.tau_residual = phi(rb.tau);
        if (!(std::fabs(rb.tau_residual) <= 1e-10))
            throw NoRootError("weak-case root finder: residual " + fmt_double(rb.tau_residual) +
                              " exceeds 1e-10");
        rb.exponent = r_lower * (e_inv - eta + m.kappa.moment(rb.tau) - 1.0);
        rb.poly_power = -1.5;
    }

    rb.vacuous = rb.exponent > 0.0 || (rb.exponent == 0.0 && rb.poly_power >= 0.0);
    if (rb.vacuous) rb.notes.push_back("the envelope does not decay for these parameters (vacuous bound)");
    return rb;
}

// ---- Whole-model classification ---------------------------------------------

struct ClassifyGrids {
    std::vector<double> near_zero, large_x;
};

struct ClassifyOptions {
    std::map<ConditionId, ConditionParams> overrides;
    double slack = 0.1;      // SN0/SN_INF default
    double ln_eta = 1.0;     // LN0/LN_INF bound exponent default
    double growth_eta = 0.01;  // LSG/LFG/GFG default
};

struct Conclusion {
    std::string statement;
    std::vector<std::string> hypotheses;
};

struct Classification {
    std::vector<RegimeReport> checks;  // all nine conditions, fixed order
    std::vector<Conclusion> conclusions;
    std::vector<std::string> notes;

    bool inconclusive() const { return conclusions.empty(); }

    const RegimeReport& report(ConditionId id) const {
        for (const auto& r : checks)
            if (r.id == id) return r;
        throw std::logic_error("classification is missing a condition report");
    }

    std::string text() const {
        std::string out =
            "classification (grid evidence; every verdict is a numeric surrogate of an asymptotic "
            "condition)\nconditions:\n";
        for (const auto& r : checks) {
            std::string name = to_string(r.id);
            name.resize(7, ' ');
            out += "  " + name + " " + to_string(r.verdict) + "  (" + r.params_text() + "; min margin " +
                   fmt_double(r.min_margin) + " over " + std::to_string(r.margins.size()) + " points)\n";
            for (const auto& n : r.notes) out += "          note: " + n + "\n";
        }
        if (conclusions.empty()) {
            out += "conclusions: none (inconclusive on supplied grids)\n";
        } else {
            out += "conclusions:\n";
            for (const auto& c : conclusions) {
                out += "  - " + c.statement + "\n";
                for (const auto& h : c.hypotheses) out += "      hypothesis: " + h + "\n";
            }
        }
        if (!notes.empty()) {
            out += "notes:\n";
            for (const auto& n : notes) out += "  - " + n + "\n";
        }
        return out;
    }
};

inline Classification classify(const ModelSpec& m, const ClassifyGrids& grids,
                               const ClassifyOptions& options = {}) {
    if (grids.near_zero.empty() || grids.large_x.empty())
        throw std::domain_error("classify needs both a near-0 grid and a large-x grid");

    std::vector<double> all = grids.near_zero;
    all.insert(all.end(), grids.large_x.begin(), grids.large_x.end());
    all = detail::prep_grid(all);

    auto params_for = [&](ConditionId id) {
        ConditionParams p;
        auto it = options.overrides.find(id);
        if (it != options.overrides.end()) p = it->second;
        switch (id) {
            case ConditionId::SN0:
            case ConditionId::SN_INF:
                if (!p.slack) p.slack = options.slack;
                break;
            case ConditionId::LN0:
            case ConditionId::LN_INF:
                if (!p.eta) p.eta = options.ln_eta;
                break;
            case ConditionId::LSG:
            case ConditionId::LFG:
            case ConditionId::GFG:
                if (!p.eta) p.eta = options.growth_eta;
                break;
            default:
                break;
        }
        return p;
    };

    Classification cls;
    const ConditionId order[] = {ConditionId::SN0, ConditionId::LN0,  ConditionId::SN_INF,
                                 ConditionId::LN_INF, ConditionId::LSG, ConditionId::LFG,
                                 ConditionId::GSG, ConditionId::GFG, ConditionId::GVFG};
    for (ConditionId id : order) {
        const std::vector<double>* g = &all;
        if (id == ConditionId::SN0 || id == ConditionId::LN0) g = &grids.near_zero;
        if (id == ConditionId::SN_INF || id == ConditionId::LN_INF) g = &grids.large_x;
        try {
            cls.checks.push_back(check_condition(m, id, params_for(id), *g));
        } catch (const InfiniteMomentError& e) {
            RegimeReport rep;
            rep.id = id;
            rep.notes.push_back(std::string("check aborted: ") + e.what());
            cls.checks.push_back(rep);
        } catch (const QuadratureError& e) {
            RegimeReport rep;
            rep.id = id;
            rep.notes.push_back(std::string("check aborted: ") + e.what());
            cls.checks.push_back(rep);
        }
    }

    // grid positivity facts used as side hypotheses
    bool r_pos = true, p_pos = true, noise_pos = true;
    for (double x : all) {
        if (!(m.r(x) > 0.0)) r_pos = false;
        if (!(m.p(x) > 0.0)) p_pos = false;
        if (!(m.sigma2(x) + m.p(x) > 0.0)) noise_pos = false;
    }

    const RegimeReport& sn0 = cls.report(ConditionId::SN0);
    const RegimeReport& ln0 = cls.report(ConditionId::LN0);
    const RegimeReport& sninf = cls.report(ConditionId::SN_INF);
    const RegimeReport& lninf = cls.report(ConditionId::LN_INF);
    const RegimeReport& lsg = cls.report(ConditionId::LSG);
    const RegimeReport& lfg = cls.report(ConditionId::LFG);
    const RegimeReport& gsg = cls.report(ConditionId::GSG);
    const RegimeReport& gfg = cls.report(ConditionId::GFG);
    const RegimeReport& gvfg = cls.report(ConditionId::GVFG);

    auto hyp = [](const RegimeReport& r) {
        return std::string(to_string(r.id)) + " satisfied-on-grid (" + r.params_text() + ", min margin " +
               fmt_double(r.min_margin) + ")";
    };

    std::set<std::string> seen;
    auto add = [&](std::string stmt, std::vector<std::string> hyps) {
        if (!seen.insert(stmt).second) return;
        cls.conclusions.push_back({std::move(stmt), std::move(hyps)});
    };

    if (sn0.satisfied()) add("the process never hits 0 (absorption impossible)", {hyp(sn0)});
    if (ln0.satisfied()) {
        std::vector<std::string> hs{hyp(ln0)};
        std::string stmt = "absorption has positive probability for small initial conditions";
        if (r_pos) {
            stmt = "absorption has positive probability from every initial condition";
            hs.push_back("r > 0 at every supplied grid point");
        }
        add(std::move(stmt), std::move(hs));
    }
    if (sninf.satisfied()) add("no explosion in finite time", {hyp(sninf)});
    if (lninf.satisfied()) {
        std::vector<std::string> hs{hyp(lninf)};
        std::string stmt = "explosion in finite time has positive probability for large initial conditions";
        if (noise_pos) {
            stmt = "explosion in finite time has positive probability from every initial condition";
            hs.push_back("sigma2 + p > 0 at every supplied grid point");
        }
        add(std::move(stmt), std::move(hs));
    }
    if (sn0.satisfied() && sninf.satisfied() && (lsg.satisfied() || lfg.satisfied())) {
        const RegimeReport& lg = lsg.satisfied() ? lsg : lfg;
        add("converges in law to the unique stationary distribution; the stationary identity "
            "E[g(X) - X r(X) (1 - E[Theta])] = 0 holds and time averages converge to stationary means",
            {hyp(sn0), hyp(sninf), hyp(lg)});
    }
    if (sninf.satisfied() && ln0.satisfied() && lsg.satisfied() && r_pos)
        add("extinction: X_t -> 0 almost surely",
            {hyp(sninf), hyp(ln0), hyp(lsg), "r > 0 at every supplied grid point"});
    if (sn0.satisfied() && lninf.satisfied() && lfg.satisfied() && p_pos)
        add("explosion: X_t -> infinity almost surely",
            {hyp(sn0), hyp(lninf), hyp(lfg), "p > 0 at every supplied grid point"});

    if (gsg.satisfied()) {
        const bool strong = gsg.eta > 0.0 || gsg.min_margin > 0.0;
        if (strong)
            add("X_t -> 0 almost surely (decay-rate bounds apply)", {hyp(gsg)});
        else
            add("liminf of X_t is 0 almost surely", {hyp(gsg)});
    }
    if (gfg.satisfied()) {
        // boundedness of (sigma2 + p)/x is a hypothesis we can only screen for
        std::vector<double> lx, lq;
        for (double x : all) {
            const double q = (m.sigma2(x) + m.p(x)) / x;
            if (q > 0.0) {
                lx.push_back(std::log(x));
                lq.push_back(std::log(q));
            }
        }
        bool bounded = true;
        if (lq.size() >= 3) bounded = fit_line(lx, lq).slope <= 0.05;
        if (bounded && m.pi.m1_finite())
            add("with positive probability the process stays bounded away from 0",
                {hyp(gfg), "jump sizes have a finite first moment",
                 "(sigma2(x) + p(x))/x shows no growth trend on the grid (heuristic screen)"});
        else
            cls.notes.push_back(
                "GFG holds but the side hypothesis ((sigma2+p)/x bounded) is not in evidence on the grid; "
                "no conclusion emitted");
    }
    if (gvfg.satisfied()) {
        const bool strong = gvfg.eta > 0.0 || gvfg.min_margin > 0.0;
        if (strong)
            add("X_t -> infinity almost surely", {hyp(gvfg)});
        else
            add("limsup of X_t is infinity almost surely", {hyp(gvfg)});
        add("the process never hits 0 (absorption impossible)",
            {hyp(gvfg), "implication ladder: GVFG => no absorption"});
        cls.notes.push_back("implication ladder: GVFG => GFG at the same eta");
    }

    if (cls.inconclusive()) cls.notes.push_back("inconclusive on supplied grids");
    return cls;
}

}  // namespace branchcat
