#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/simulate.hpp"
#include "branchcat/stats.hpp"
#include "branchcat/util.hpp"

namespace branchcat {

struct McEstimate {
    std::string quantity;
    std::uint64_t n = 0;
    double mean = 0, se = 0;
    Interval ci95{0, 0};
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Digest of the experiment definition (model + integrator settings + op
// parameters). The seed is deliberately excluded: it is reported alongside,
// so runs that differ only by seed share a digest.
inline std::string sim_digest(const ModelSpec& m, const SimConfig& cfg, const std::string& extra = {}) {
    std::string s = serialize_model(m);
    s += "dt=" + fmt_double(cfg.dt) + "\n";
    s += "t_max=" + fmt_double(cfg.t_max) + "\n";
    s += "x_abs=" + fmt_double(cfg.x_abs) + "\n";
    s += "x_max=" + fmt_double(cfg.x_max) + "\n";
    s += "rate_cap_factor=" + fmt_double(cfg.rate_cap_factor) + "\n";
    if (cfg.stop_below) s += "stop_below=" + fmt_double(*cfg.stop_below) + "\n";
    if (cfg.stop_above) s += "stop_above=" + fmt_double(*cfg.stop_above) + "\n";
    if (cfg.ga_exponent) s += "ga_exponent=" + fmt_double(*cfg.ga_exponent) + "\n";
    if (!extra.empty()) s += extra + "\n";
    return hex16(fnv1a64(s));
}

namespace detail {

// Runs fn(i) for i in [0, n) across `threads` workers and returns the results
// in index order. Each path owns its own counter-based stream keyed by index,
// and results land in their slot, so the output is byte-identical for every
// thread count. The first exception wins and is rethrown after all workers
// drain.
template <class R, class Fn>
std::vector<R> run_indexed(std::uint64_t n, int threads, Fn&& fn) {
    std::vector<R> out(n);
    std::uint64_t want = threads > 0 ? static_cast<std::uint64_t>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
    if (n > 0) want = std::min(want, n);
    if (want <= 1 || n == 0) {
        for (std::uint64_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> bail{false};
    std::mutex mtx;
    std::exception_ptr err;
    constexpr std::uint64_t chunk = 64;
    auto work = [&]() {
        for (;;) {
            if (bail.load(std::memory_order_relaxed)) return;
            const std::uint64_t b = next.fetch_add(chunk, std::memory_order_relaxed);
            if (b >= n) return;
            const std::uint64_t e = std::min(b + chunk, n);
            try {
                for (std::uint64_t i = b; i < e; ++i) out[i] = fn(i);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lk(mtx);
                    if (!err) err = std::current_exception();
                }
                bail.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(want - 1);
    for (std::uint64_t i = 0; i + 1 < want; ++i) pool.emplace_back(work);
    work();
    for (auto& w : pool) w.join();
    if (err) std::rethrow_exception(err);
    return out;
}

inline void mean_se(const std::vector<double>& v, double& mean, double& se) {
    if (v.empty()) {
        mean = std::numeric_limits<double>::quiet_NaN();
        se = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    const double n = static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += x;
    mean = s / n;
    double ss = 0;
    for (double x : v) {
        const double d = x - mean;
        ss += d * d;
    }
    se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

inline McEstimate make_mean_estimate(std::string quantity, const std::vector<double>& v,
                                     std::uint64_t seed, std::string digest) {
    McEstimate est;
    est.quantity = std::move(quantity);
    est.n = v.size();
    mean_se(v, est.mean, est.se);
    est.ci95 = {est.mean - 1.96 * est.se, est.mean + 1.96 * est.se};
    est.seed = seed;
    est.config_hash = std::move(digest);
    return est;
}

}  // namespace detail

enum class EventQueryKind { absorbed_by, exploded_by, survives_at };

inline const char* to_string(EventQueryKind k) {
    switch (k) {
        case EventQueryKind::absorbed_by: return "absorbed-by";
        case EventQueryKind::exploded_by: return "exploded-by";
        case EventQueryKind::survives_at: return "survives-at";
    }
    return "?";
}

struct EventQuery {
    EventQueryKind kind = EventQueryKind::absorbed_by;
    double t = 1.0;
};

// Probability that a path is absorbed by / has exploded by / is still running
// at time t. The three kinds partition the ensemble at fixed t: the same seed
// replays the same paths, so absorbed + exploded + survives sums to one
// exactly. Stop levels must be unset, otherwise stopped paths would leave the
// partition ambiguous.
inline McEstimate estimate_event_prob(const ModelSpec& m, const SimConfig& cfg, double x0,
                                      const EventQuery& q, std::uint64_t n, int threads = 1) {
    if (n < 100) throw std::domain_error("estimate_event_prob: need n >= 100");
    if (!(q.t > 0.0) || q.t > cfg.t_max)
        throw std::domain_error("estimate_event_prob: event time must lie in (0, t_max]");
    if (cfg.stop_below || cfg.stop_above)
        throw std::domain_error("estimate_event_prob: stop levels must be unset");
    SimConfig c = cfg;
    c.t_max = q.t;
    c.ga_exponent.reset();
    auto noop_s = [](double, double, double) {};
    auto noop_e = [](const PathEvent&) {};
    auto noop_m = [](std::uint64_t, double, double) {};
    const auto flags = detail::run_indexed<std::uint8_t>(n, threads, [&](std::uint64_t i) -> std::uint8_t {
        RngStream rng(c.seed, i);
        const Terminal t = detail::run_path_core(m, c, x0, i, rng, noop_s, noop_e, noop_m);
        switch (q.kind) {
            case EventQueryKind::absorbed_by: return t.outcome == OutcomeKind::absorbed;
            case EventQueryKind::exploded_by: return t.outcome == OutcomeKind::exploded;
            default: return t.outcome == OutcomeKind::ran_to_horizon;
        }
    });
    std::uint64_t k = 0;
    for (auto f : flags) k += f;
    McEstimate est;
    est.quantity = std::string(to_string(q.kind)) + "(" + fmt_double(q.t) + ")";
    est.n = n;
    est.mean = static_cast<double>(k) / static_cast<double>(n);
    est.se = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
    est.ci95 = wilson_interval(k, n);
    est.seed = cfg.seed;
    est.config_hash = sim_digest(m, c, "x0=" + fmt_double(x0) + ";q=" + est.quantity);
    return est;
}

struct SurvivalCurve {
    std::vector<double> times;
    std::vector<std::uint64_t> n_alive;
    std::vector<double> p_hat, se;
    std::uint64_t n = 0;
    std::uint64_t exploded = 0;  // paths that exploded before the last time point
    std::uint64_t seed = 0;
    std::string config_hash;
};

// P(absorption has not happened by t) on a time grid, one simulation pass.
// Exploded paths count as alive (not absorbed) and are tallied separately.
inline SurvivalCurve survival_curve(const ModelSpec& m, const SimConfig& cfg, double x0,
                                    std::vector<double> times, std::uint64_t n, int threads = 1) {
    if (times.empty()) throw std::domain_error("survival_curve: empty time grid");
    std::sort(times.begin(), times.end());
    if (!(times.front() > 0.0)) throw std::domain_error("survival_curve: times must be > 0");
    if (cfg.stop_below || cfg.stop_above)
        throw std::domain_error("survival_curve: stop levels must be unset");
    SimConfig c = cfg;
    c.t_max = times.back();
    c.ga_exponent.reset();
    struct PathOut {
        double t_abs = std::numeric_limits<double>::infinity();
        std::uint8_t exploded = 0;
    };
    auto noop_s = [](double, double, double) {};
    auto noop_e = [](const PathEvent&) {};
    auto noop_m = [](std::uint64_t, double, double) {};
    const auto outs = detail::run_indexed<PathOut>(n, threads, [&](std::uint64_t i) {
        RngStream rng(c.seed, i);
        const Terminal t = detail::run_path_core(m, c, x0, i, rng, noop_s, noop_e, noop_m);
        PathOut o;
        if (t.outcome == OutcomeKind::absorbed) o.t_abs = t.t;
        if (t.outcome == OutcomeKind::exploded) o.exploded = 1;
        return o;
    });
    SurvivalCurve curve;
    curve.times = times;
    curve.n = n;
    curve.seed = cfg.seed;
    curve.config_hash = sim_digest(m, c, "x0=" + fmt_double(x0) + ";op=survival");
    for (const auto& o : outs) curve.exploded += o.exploded;
    for (double t : times) {
        std::uint64_t alive = 0;
        for (const auto& o : outs) alive += o.t_abs > t ? 1 : 0;
        const double p = static_cast<double>(alive) / static_cast<double>(n);
        curve.n_alive.push_back(alive);
        curve.p_hat.push_back(p);
        curve.se.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
    }
    return curve;
}

struct DecayFit {
    SurvivalCurve curve;
    std::vector<double> times, log_survival;  // points retained for the fit
    double poly_power = 0;
    double slope = 0, intercept = 0, slope_se = 0;
    Interval slope_ci{0, 0};
    std::vector<std::string> notes;
};

// Fits ln P(alive at t) - poly_power * ln t  ~  intercept + slope * t over the
// time points that still carry at least 30 surviving paths. The slope then
// estimates the exponential decay rate of survival with the polynomial factor
// t^poly_power divided out.
inline DecayFit survival_decay_fit(const ModelSpec& m, const SimConfig& cfg, double x0,
                                   const std::vector<double>& times, double poly_power,
                                   std::uint64_t n, int threads = 1) {
    if (times.size() < 4) throw std::domain_error("survival_decay_fit: need at least 4 time points");
    DecayFit fit;
    fit.curve = survival_curve(m, cfg, x0, times, n, threads);
    fit.poly_power = poly_power;
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < fit.curve.times.size(); ++i) {
        if (fit.curve.n_alive[i] < 30) continue;
        const double t = fit.curve.times[i];
        const double lp = std::log(fit.curve.p_hat[i]);
        ts.push_back(t);
        fit.times.push_back(t);
        fit.log_survival.push_back(lp);
        ys.push_back(lp - poly_power * std::log(t));
    }
    if (ts.size() < 4)
        throw TooFewSurvivorsError("survival_decay_fit: only " + std::to_string(ts.size()) +
                                   " time points keep >= 30 survivors (need 4)");
    const LineFit lf = fit_line(ts, ys);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.slope_se = lf.slope_se;
    fit.slope_ci = lf.slope_ci95;
    if (ts.size() < times.size())
        fit.notes.push_back("dropped " + std::to_string(times.size() - ts.size()) +
                            " time points with fewer than 30 survivors");
    if (fit.curve.exploded > 0)
        fit.notes.push_back(std::to_string(fit.curve.exploded) +
                            " paths exploded; they count as surviving");
    return fit;
}

struct StationaryReport {
    std::uint64_t n = 0, alive_end = 0, alive_cmp = 0, absorbed = 0, exploded = 0;
    double t_burn = 0, t_end = 0, t_cmp = 0;
    McEstimate mean, second_moment, residual;
    double moment_ratio = std::numeric_limits<double>::quiet_NaN();
    double ks = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> notes;
};

// Snapshots the surviving population at t_end and at 1.5*t_end. Moment
// estimates come from the t_end snapshot; the later snapshot feeds a
// Kolmogorov-Smirnov distance as a stationarity diagnostic. The residual
// observable g(X) - X r(X) (1 - E[Theta]) has mean zero under a stationary
// law when jumps are absent.
inline StationaryReport stationary_estimate(const ModelSpec& m, const SimConfig& cfg, double x0,
                                            double t_burn, double t_end, std::uint64_t n,
                                            int threads = 1) {
    if (!(t_end > 0.0)) throw std::domain_error("stationary_estimate: t_end must be > 0");
    if (!(t_burn >= 0.0) || !(t_burn < t_end))
        throw std::domain_error("stationary_estimate: need 0 <= t_burn < t_end");
    if (cfg.stop_below || cfg.stop_above)
        throw std::domain_error("stationary_estimate: stop levels must be unset");
    SimConfig c = cfg;
    c.t_max = 1.5 * t_end;
    c.ga_exponent.reset();
    struct Snap {
        double x_end = 0, x_cmp = 0;
        std::uint8_t alive_end = 0, alive_cmp = 0, absorbed = 0, exploded = 0;
    };
    auto noop_e = [](const PathEvent&) {};
    auto noop_s = [](double, double, double) {};
    const auto snaps = detail::run_indexed<Snap>(n, threads, [&](std::uint64_t i) {
        RngStream rng(c.seed, i);
        Snap sn;
        bool got_end = false;
        const double t_lo = t_end - 1e-9 * c.dt;
        const Terminal term = detail::run_path_core(
            m, c, x0, i, rng, noop_s, noop_e,
            [&](std::uint64_t, double t, double xv) {
                if (!got_end && t >= t_lo) {
                    sn.x_end = xv;
                    sn.alive_end = 1;
                    got_end = true;
                }
            });
        if (term.outcome == OutcomeKind::ran_to_horizon) {
            sn.x_cmp = term.x;
            sn.alive_cmp = 1;
        } else if (term.outcome == OutcomeKind::absorbed) {
            sn.absorbed = 1;
        } else if (term.outcome == OutcomeKind::exploded) {
            sn.exploded = 1;
        }
        return sn;
    });

    StationaryReport rep;
    rep.n = n;
    rep.t_burn = t_burn;
    rep.t_end = t_end;
    rep.t_cmp = 1.5 * t_end;
    std::vector<double> xs_end, xs_cmp;
    for (const auto& sn : snaps) {
        if (sn.alive_end) xs_end.push_back(sn.x_end);
        if (sn.alive_cmp) xs_cmp.push_back(sn.x_cmp);
        rep.absorbed += sn.absorbed;
        rep.exploded += sn.exploded;
    }
    rep.alive_end = xs_end.size();
    rep.alive_cmp = xs_cmp.size();
    if (xs_end.empty()) throw AllAbsorbedError("stationary_estimate: no path survives to t_end");
    if (xs_cmp.empty())
        throw AllAbsorbedError("stationary_estimate: no path survives to the comparison snapshot");

    const std::string digest = sim_digest(m, c, "x0=" + fmt_double(x0) + ";op=stationary;t_end=" +
                                                    fmt_double(t_end));
    std::vector<double> sq(xs_end.size()), res(xs_end.size());
    const double one_minus_et = 1.0 - m.kappa.moment(1.0);
    for (std::size_t i = 0; i < xs_end.size(); ++i) {
        const double x = xs_end[i];
        sq[i] = x * x;
        res[i] = m.g(x) - x * m.r(x) * one_minus_et;
    }
    rep.mean = detail::make_mean_estimate("stationary_mean", xs_end, cfg.seed, digest);
    rep.second_moment = detail::make_mean_estimate("stationary_second_moment", sq, cfg.seed, digest);
    rep.residual = detail::make_mean_estimate("stationary_drift_residual", res, cfg.seed, digest);
    if (rep.mean.mean > 0.0) rep.moment_ratio = rep.second_moment.mean / rep.mean.mean;
    rep.ks = ks_statistic(xs_end, xs_cmp);
    rep.notes.push_back("t_burn recorded as metadata; snapshots are taken at t_end and 1.5*t_end");
    if (!m.p.is_zero()) rep.notes.push_back("drift residual ignores the jump part");
    return rep;
}

struct ObservableFn {
    enum class Kind { indicator, clip };
    Kind kind = Kind::clip;
    double lo = 0, hi = 1;

    double operator()(double x) const {
        if (kind == Kind::indicator) return x > lo && x < hi ? 1.0 : 0.0;
        return std::min(std::max(x, lo), hi);
    }
    std::string to_string() const {
        return std::string(kind == Kind::indicator ? "indicator(" : "clip(") + fmt_double(lo) + ", " +
               fmt_double(hi) + ")";
    }
    // "indicator(lo, hi)" or "clip(lo, hi)"; bounds accept "inf".
    static ObservableFn parse(const std::string& text) {
        const auto open = text.find('(');
        const auto close = text.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open)
            throw ConfigError("observable: expected name(lo, hi), got '" + text + "'");
        const std::string name = text.substr(0, open);
        const std::string args = text.substr(open + 1, close - open - 1);
        const auto comma = args.find(',');
        if (comma == std::string::npos)
            throw ConfigError("observable: expected two arguments in '" + text + "'");
        ObservableFn f;
        if (name == "indicator")
            f.kind = Kind::indicator;
        else if (name == "clip")
            f.kind = Kind::clip;
        else
            throw ConfigError("observable: unknown function '" + name + "'");
        f.lo = parse_double(args.substr(0, comma));
        f.hi = parse_double(args.substr(comma + 1));
        if (!(f.lo < f.hi)) throw ConfigError("observable: need lo < hi in '" + text + "'");
        return f;
    }
};

struct ErgodicReport {
    double value = 0;  // (1/t_end) int_0^t f(X_s) ds, see `partial`
    double t_elapsed = 0, t_end = 0;
    bool partial = false;  // true when the window could not be completed
    OutcomeKind outcome = OutcomeKind::ran_to_horizon;
    std::string note;
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Time average of f along a single path (stream 0), accumulated on the full
// substep resolution. An absorbed path completes the window with f(0), since
// 0 is absorbing; an exploded path yields the average over the realized
// window only, flagged partial.
inline ErgodicReport ergodic_average(const ModelSpec& m, const SimConfig& cfg, double x0,
                                     const ObservableFn& f, double t_end) {
    if (!(t_end > 0.0)) throw std::domain_error("ergodic_average: t_end must be > 0");
    SimConfig c = cfg;
    c.t_max = t_end;
    c.ga_exponent.reset();
    RngStream rng(c.seed, 0);
    double acc = 0.0;
    auto noop_e = [](const PathEvent&) {};
    auto noop_m = [](std::uint64_t, double, double) {};
    const Terminal term = detail::run_path_core(
        m, c, x0, 0, rng, [&](double, double h, double xl) { acc += f(xl) * h; }, noop_e, noop_m);
    ErgodicReport rep;
    rep.outcome = term.outcome;
    rep.t_elapsed = term.t;
    rep.t_end = t_end;
    rep.seed = cfg.seed;
    rep.config_hash = sim_digest(m, c, "x0=" + fmt_double(x0) + ";f=" + f.to_string());
    if (term.outcome == OutcomeKind::ran_to_horizon) {
        rep.value = acc / t_end;
    } else if (term.outcome == OutcomeKind::absorbed) {
        acc += f(0.0) * (t_end - term.t);
        rep.value = acc / t_end;
        rep.note = "absorbed at t=" + fmt_double(term.t) + "; window completed with f(0)";
    } else {
        rep.partial = true;
        rep.value = term.t > 0.0 ? acc / term.t : 0.0;
        rep.note = std::string("path ended early (") + to_string(term.outcome) +
                   "); average taken over the realized window";
    }
    return rep;
}

struct MartingaleReport {
    double a = 0, x0 = 0, c = 0, b = 0, budget = 0;
    double target = 0;  // x0^(1-a)
    std::vector<double> checkpoints;
    std::vector<McEstimate> z;
    std::vector<bool> within;
    std::uint64_t n = 0, n_boundary_zero = 0;
    bool ok = false;
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Checks E[ Z_t ] = x0^(1-a) for Z_t = X_{t ^ T}^{1-a} exp( int_0^{t ^ T} G_a(X_s) ds ),
// T the exit time of (c, b). Stopping inside the corridor keeps both factors
// finite; a path that still reaches 0 (possible within one substep) makes Z
// infinite for a > 1 and is tallied in n_boundary_zero rather than patched.
inline MartingaleReport martingale_check(const ModelSpec& m, const SimConfig& cfg, double x0, double a,
                                         double c, double b, std::vector<double> checkpoints,
                                         std::uint64_t n, int threads = 1, double budget = 0.02) {
    if (!(0.0 < c && c < x0 && x0 < b))
        throw std::domain_error("martingale_check: need 0 < c < x0 < b");
    if (checkpoints.empty()) throw std::domain_error("martingale_check: no checkpoints");
    std::sort(checkpoints.begin(), checkpoints.end());
    if (!(checkpoints.front() >= 0.0))
        throw std::domain_error("martingale_check: checkpoints must be >= 0");
    if (!(checkpoints.back() > 0.0))
        throw std::domain_error("martingale_check: the last checkpoint must be > 0");
    if (n < 100) throw std::domain_error("martingale_check: need n >= 100");
    const GaEvaluator ga_probe(m, a);  // validates a against the model up front
    (void)ga_probe;

    SimConfig sc = cfg;
    sc.t_max = checkpoints.back();
    sc.stop_below = c;
    sc.stop_above = b;
    sc.ga_exponent.reset();
    if (!(sc.dt < sc.t_max)) sc.dt = sc.t_max / 16.0;

    const std::size_t K = checkpoints.size();
    const double target = std::pow(x0, 1.0 - a);
    struct PathZ {
        std::vector<double> z;
        std::uint8_t hit_zero = 0;
    };
    auto noop_e = [](const PathEvent&) {};
    const auto paths = detail::run_indexed<PathZ>(n, threads, [&](std::uint64_t i) {
        RngStream rng(sc.seed, i);
        const GaEvaluator ga(m, a);
        PathZ out;
        out.z.assign(K, 0.0);
        std::size_t next = 0;
        double ga_acc = 0.0;
        while (next < K && checkpoints[next] == 0.0) out.z[next++] = target;
        const double tol = 1e-9 * sc.dt;
        auto z_of = [&](double xv) { return std::pow(xv, 1.0 - a) * std::exp(ga_acc); };
        const Terminal term = detail::run_path_core(
            m, sc, x0, i, rng,
            [&](double, double h, double xl) {
                if (xl > 0.0) ga_acc += ga(xl) * h;
            },
            noop_e,
            [&](std::uint64_t, double t, double xv) {
                while (next < K && t >= checkpoints[next] - tol) out.z[next++] = z_of(xv);
            });
        const double z_term = z_of(term.x);
        while (next < K) out.z[next++] = z_term;
        if (term.x <= 0.0) out.hit_zero = 1;
        return out;
    });

    MartingaleReport rep;
    rep.a = a;
    rep.x0 = x0;
    rep.c = c;
    rep.b = b;
    rep.budget = budget;
    rep.target = target;
    rep.checkpoints = checkpoints;
    rep.n = n;
    rep.seed = cfg.seed;
    rep.config_hash = sim_digest(m, sc, "x0=" + fmt_double(x0) + ";a=" + fmt_double(a) +
                                            ";op=martingale");
    for (const auto& p : paths) rep.n_boundary_zero += p.hit_zero;
    bool all_ok = true;
    std::vector<double> zs(n);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::uint64_t i = 0; i < n; ++i) zs[i] = paths[i].z[k];
        McEstimate est = detail::make_mean_estimate(
            "martingale_z(t=" + fmt_double(checkpoints[k]) + ")", zs, cfg.seed, rep.config_hash);
        const bool win = std::fabs(est.mean - target) <= 3.0 * est.se + budget;
        rep.z.push_back(std::move(est));
        rep.within.push_back(win);
        all_ok = all_ok && win;
    }
    rep.ok = all_ok;
    return rep;
}

}  // namespace branchcat
