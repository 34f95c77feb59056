#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "branchcat/criteria.hpp"
#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/rng.hpp"

namespace branchcat {

struct SimConfig {
    double dt = 1e-3;
    double t_max = 1.0;
    double x_abs = 1e-9;             // absorption declared at x <= x_abs
    double x_max = 1e12;             // explosion declared at x >= x_max
    double rate_cap_factor = 0.1;    // substep halving until (jump+cat rate) * h <= this
    std::uint64_t seed = 0;
    std::uint64_t record_stride = 1;  // keep every k-th macro boundary in the record
    std::optional<double> stop_below, stop_above;  // early-stop levels, hit times recorded
    std::optional<double> ga_exponent;             // accumulate int G_a(X_s) ds along the path

    void validate() const {
        if (!(dt > 0.0)) throw std::domain_error("sim: dt must be > 0");
        if (!(t_max > 0.0)) throw std::domain_error("sim: t_max must be > 0");
        if (!(dt < t_max)) throw std::domain_error("sim: dt must be < t_max");
        if (!(x_abs >= 0.0)) throw std::domain_error("sim: x_abs must be >= 0");
        if (!(x_abs < x_max)) throw std::domain_error("sim: x_abs must be < x_max");
        if (!(rate_cap_factor > 0.0)) throw std::domain_error("sim: rate_cap_factor must be > 0");
        if (record_stride == 0) throw std::domain_error("sim: record_stride must be >= 1");
        if (stop_below && !(*stop_below > 0.0)) throw std::domain_error("sim: stop_below must be > 0");
        if (stop_above && stop_below && !(*stop_above > *stop_below))
            throw std::domain_error("sim: stop_above must exceed stop_below");
    }
};

enum class OutcomeKind { ran_to_horizon, absorbed, exploded, stopped_low, stopped_high };

inline const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::ran_to_horizon: return "ran-to-horizon";
        case OutcomeKind::absorbed: return "absorbed";
        case OutcomeKind::exploded: return "exploded";
        case OutcomeKind::stopped_low: return "stopped-low";
        case OutcomeKind::stopped_high: return "stopped-high";
    }
    return "?";
}

enum class EventKind { positive_jump, catastrophe };

inline const char* to_string(EventKind k) {
    return k == EventKind::positive_jump ? "posjump" : "catastrophe";
}

struct PathEvent {
    double t = 0;
    EventKind kind = EventKind::positive_jump;
    double magnitude = 0;  // jump size z, or catastrophe factor theta
    double before = 0, after = 0;
};

struct Terminal {
    OutcomeKind outcome = OutcomeKind::ran_to_horizon;
    double t = 0, x = 0;
    std::uint64_t substeps = 0;
};

namespace detail {

// Core integrator. Macro boundaries sit at exact multiples of dt (recomputed
// as j*dt, never accumulated); inside a macro step the substep h is halved
// until the total event rate times h is below the cap. Per substep, in fixed
// draw order (normal, jump uniform, jump size, catastrophe uniform, factor;
// draws owned by an all-zero coefficient family are skipped entirely):
//   x' = x + (g(x+) - p(x+) m1) h + sqrt(2 sigma2(x+) h) * N(0,1)
//   with prob p(x+) m0 h: x' += z,  z ~ pi/m0
//   with prob r(x+) h:    x' *= theta, theta ~ kappa
// then clamp at 0 and test stop/absorption/explosion thresholds.
//
// on_sample(t_left, h, x_left) fires before each substep (left-endpoint
// integrands); on_event fires at the substep end for each jump/catastrophe;
// on_macro(j, t_j, x) fires at every macro boundary.
template <class SampleFn, class EventFn, class MacroFn>
Terminal run_path_core(const ModelSpec& m, const SimConfig& cfg, double x0, std::uint64_t path_index,
                       RngStream& rng, SampleFn&& on_sample, EventFn&& on_event, MacroFn&& on_macro) {
    cfg.validate();
    if (!(x0 >= 0.0)) throw std::domain_error("simulate: x0 must be >= 0");

    const bool has_diff = !m.sigma2.is_zero();
    const bool has_jump = !m.p.is_zero() && m.pi.m0() > 0.0;
    const bool has_cat = !m.r.is_zero();
    const double jump_m0 = has_jump ? m.pi.m0() : 0.0;
    const double jump_m1 = has_jump ? m.pi.m1() : 0.0;

    double x = x0;
    std::uint64_t substeps = 0;

    auto terminal_here = [&](double tnow) -> std::optional<Terminal> {
        if (cfg.stop_below && x < *cfg.stop_below)
            return Terminal{OutcomeKind::stopped_low, tnow, x, substeps};
        if (cfg.stop_above && x > *cfg.stop_above)
            return Terminal{OutcomeKind::stopped_high, tnow, x, substeps};
        if (x <= cfg.x_abs) {
            x = 0.0;
            return Terminal{OutcomeKind::absorbed, tnow, 0.0, substeps};
        }
        if (x >= cfg.x_max) return Terminal{OutcomeKind::exploded, tnow, x, substeps};
        return std::nullopt;
    };

    if (auto term = terminal_here(0.0)) return *term;

    for (std::uint64_t j = 0;; ++j) {
        const double t0 = static_cast<double>(j) * cfg.dt;
        if (t0 >= cfg.t_max) break;
        const double t1 = std::min(static_cast<double>(j + 1) * cfg.dt, cfg.t_max);
        const double macro_len = t1 - t0;
        double s = 0.0;
        while (s < macro_len) {
            const double x_plus = x > 0.0 ? x : 0.0;
            const double jump_rate = has_jump ? m.p(x_plus) * jump_m0 : 0.0;
            const double cat_rate = has_cat ? m.r(x_plus) : 0.0;
            const double total_rate = jump_rate + cat_rate;
            double h = macro_len - s;
            while (total_rate * h > cfg.rate_cap_factor) {
                h *= 0.5;
                if (h < 1e-300)
                    throw NonFiniteStateError("event rate too large: substep underflowed",
                                              path_index);
            }
            on_sample(t0 + s, h, x_plus);

            double xn = x + m.g(x_plus) * h;
            if (has_jump) xn -= m.p(x_plus) * jump_m1 * h;
            if (has_diff) {
                const double s2 = std::max(m.sigma2(x_plus), 0.0);
                xn += std::sqrt(2.0 * s2 * h) * rng.normal();
            }
            PathEvent evbuf[2];
            int nev = 0;
            if (has_jump) {
                const double u = rng.uniform01();
                if (u <= jump_rate * h) {
                    const double z = m.pi.sample(rng);
                    evbuf[nev] = {0.0, EventKind::positive_jump, z, xn, xn + z};
                    ++nev;
                    xn += z;
                }
            }
            if (has_cat) {
                const double u = rng.uniform01();
                if (u <= cat_rate * h) {
                    const double th = m.kappa.sample(rng);
                    evbuf[nev] = {0.0, EventKind::catastrophe, th, xn, xn * th};
                    ++nev;
                    xn *= th;
                }
            }
            if (std::isnan(xn)) throw NonFiniteStateError("path state became NaN", path_index);
            if (xn < 0.0) xn = 0.0;
            x = xn;
            ++substeps;
            s += h;
            if (macro_len - s <= 1e-12 * macro_len) s = macro_len;
            const double tnow = s >= macro_len ? t1 : t0 + s;
            for (int i = 0; i < nev; ++i) {
                evbuf[i].t = tnow;
                on_event(evbuf[i]);
            }
            if (auto term = terminal_here(tnow)) return *term;
        }
        on_macro(j + 1, t1, x);
    }
    return Terminal{OutcomeKind::ran_to_horizon, cfg.t_max, x, substeps};
}

}  // namespace detail

struct PathRecord {
    std::vector<double> times;   // strictly increasing: macro boundaries (stride), events, terminal
    std::vector<double> states;  // matching clamped states, always >= 0
    std::vector<double> ga;      // matching int G_a ds, present iff cfg.ga_exponent was set
    std::vector<PathEvent> events;
    OutcomeKind outcome = OutcomeKind::ran_to_horizon;
    double t_final = 0, x_final = 0;
    std::optional<double> tau_low, tau_high;       // stop-level hit times (substep resolution)
    std::optional<double> stop_below, stop_above;  // the configured levels, for provenance
    std::uint64_t path_index = 0, substeps = 0;
};

inline PathRecord simulate_path(const ModelSpec& m, const SimConfig& cfg, double x0,
                                std::uint64_t path_index = 0) {
    RngStream rng(cfg.seed, path_index);
    PathRecord rec;
    rec.path_index = path_index;
    rec.stop_below = cfg.stop_below;
    rec.stop_above = cfg.stop_above;

    const bool want_ga = cfg.ga_exponent.has_value();
    std::optional<GaEvaluator> ga;
    if (want_ga) ga.emplace(m, *cfg.ga_exponent);
    double ga_acc = 0.0;

    auto push = [&](double t, double xv) {
        if (!rec.times.empty() && rec.times.back() == t) {
            rec.states.back() = xv;
            if (want_ga) rec.ga.back() = ga_acc;
            return;
        }
        rec.times.push_back(t);
        rec.states.push_back(xv);
        if (want_ga) rec.ga.push_back(ga_acc);
    };
    push(0.0, x0);

    const Terminal term = detail::run_path_core(
        m, cfg, x0, path_index, rng,
        [&](double, double h, double xl) {
            if (want_ga && xl > 0.0) ga_acc += (*ga)(xl)*h;
        },
        [&](const PathEvent& e) {
            rec.events.push_back(e);
            push(e.t, std::max(e.after, 0.0));
        },
        [&](std::uint64_t j, double t, double xv) {
            if (j % cfg.record_stride == 0) push(t, xv);
        });

    rec.outcome = term.outcome;
    rec.t_final = term.t;
    rec.x_final = term.x;
    rec.substeps = term.substeps;
    if (term.outcome == OutcomeKind::stopped_low) rec.tau_low = term.t;
    if (term.outcome == OutcomeKind::stopped_high) rec.tau_high = term.t;
    push(term.t, term.x);
    return rec;
}

struct HitTimes {
    std::optional<double> tau_minus, tau_plus;
};

// First recorded time strictly below `lower` / strictly above `upper`. When a
// queried level coincides with a configured stop level the stored hit time is
// used, which has substep resolution; otherwise the scan sees the record's
// granularity (macro stride plus event times).
inline HitTimes hitting_times(const PathRecord& rec, std::optional<double> lower,
                              std::optional<double> upper) {
    if (lower && !(*lower > 0.0)) throw std::domain_error("hitting_times: lower level must be > 0");
    if (upper && lower && !(*upper > *lower))
        throw std::domain_error("hitting_times: upper level must exceed lower");
    HitTimes ht;
    if (lower && rec.stop_below && *rec.stop_below == *lower && rec.tau_low) ht.tau_minus = rec.tau_low;
    if (upper && rec.stop_above && *rec.stop_above == *upper && rec.tau_high) ht.tau_plus = rec.tau_high;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        if (lower && !ht.tau_minus && rec.states[i] < *lower) ht.tau_minus = rec.times[i];
        if (upper && !ht.tau_plus && rec.states[i] > *upper) ht.tau_plus = rec.times[i];
        if ((!lower || ht.tau_minus) && (!upper || ht.tau_plus)) break;
    }
    return ht;
}

// Left-endpoint Riemann sum of G_a over the recorded path, stopped at t_stop.
inline double accumulate_Ga(const ModelSpec& m, const PathRecord& rec, double a, double t_stop) {
    if (!(t_stop >= 0.0)) throw std::domain_error("accumulate_Ga: t_stop must be >= 0");
    const GaEvaluator ga(m, a);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < rec.times.size(); ++i) {
        const double tl = rec.times[i];
        if (tl >= t_stop) break;
        const double tr = std::min(rec.times[i + 1], t_stop);
        if (!(tr > tl)) continue;
        const double xl = rec.states[i];
        if (!(xl > 0.0))
            throw std::domain_error("accumulate_Ga: path state <= 0 inside the accumulation window");
        acc += ga(xl) * (tr - tl);
    }
    return acc;
}

}  // namespace branchcat
