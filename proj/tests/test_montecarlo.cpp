#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/montecarlo.hpp"
#include "branchcat/stats.hpp"

using namespace branchcat;

namespace {

// g = 0.1 x, sigma2 = x, r = 1, Theta = 1/2: absorbed in O(1) time from small x0
ModelSpec model_extinct() {
    return build_model(CoefficientFn::linear(0.1), CoefficientFn::linear(1.0),
                       CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0), JumpMeasure::zero(),
                       FragmentationKernel::atom(0.5));
}

ModelSpec frozen_model() {
    return build_model(CoefficientFn::zero(), CoefficientFn::zero(), CoefficientFn::zero(),
                       CoefficientFn::zero(), JumpMeasure::zero(), FragmentationKernel::atom(0.5));
}

}  // namespace

TEST_CASE("wilson interval at a frozen reference point") {
    const auto iv = wilson_interval(8, 10);
    REQUIRE(iv.lo == Catch::Approx(0.490156846720723391).epsilon(1e-12));
    REQUIRE(iv.hi == Catch::Approx(0.943319052019306663).epsilon(1e-12));
    REQUIRE(iv.contains(0.8));
    REQUIRE_FALSE(iv.contains(0.2));

    const auto all = wilson_interval(10, 10);
    REQUIRE(all.hi == 1.0);
    REQUIRE(all.lo < 1.0);
    const auto none = wilson_interval(0, 10);
    REQUIRE(none.lo == 0.0);
}

TEST_CASE("ks distance on hand-computed samples") {
    REQUIRE(ks_statistic({1.0, 2.0, 3.0}, {1.5, 2.5}) == Catch::Approx(1.0 / 3.0).margin(1e-15));
    REQUIRE(ks_statistic({1.0}, {1.0}) == 0.0);
    REQUIRE(ks_statistic({0.0, 0.0}, {1.0, 1.0}) == 1.0);
}

TEST_CASE("event probabilities partition the ensemble exactly") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 5.0;
    cfg.seed = 101;
    const ModelSpec m = model_extinct();
    const std::uint64_t n = 500;
    const auto pa = estimate_event_prob(m, cfg, 0.5, {EventQueryKind::absorbed_by, 5.0}, n);
    const auto pe = estimate_event_prob(m, cfg, 0.5, {EventQueryKind::exploded_by, 5.0}, n);
    const auto ps = estimate_event_prob(m, cfg, 0.5, {EventQueryKind::survives_at, 5.0}, n);
    REQUIRE(pa.mean + pe.mean + ps.mean == 1.0);
    REQUIRE(pa.n == n);
    REQUIRE(pa.quantity == "absorbed-by(5)");
    REQUIRE(pa.ci95.lo <= pa.mean);
    REQUIRE(pa.ci95.hi >= pa.mean);
    REQUIRE(pa.mean > 0.5);  // most paths die well before t = 5 from x0 = 0.5
    REQUIRE(pe.mean == 0.0);

    // absorption probability is monotone in the horizon under a shared seed
    const auto pa3 = estimate_event_prob(m, cfg, 0.5, {EventQueryKind::absorbed_by, 3.0}, n);
    REQUIRE(pa3.mean <= pa.mean);
}

TEST_CASE("event probability estimates are independent of the thread count") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 2.0;
    cfg.seed = 7;
    const ModelSpec m = model_extinct();
    const auto one = estimate_event_prob(m, cfg, 0.5, {EventQueryKind::absorbed_by, 2.0}, 300, 1);
    const auto three = estimate_event_prob(m, cfg, 0.5, {EventQueryKind::absorbed_by, 2.0}, 300, 3);
    REQUIRE(one.mean == three.mean);
    REQUIRE(one.se == three.se);
    REQUIRE(one.config_hash == three.config_hash);
}

TEST_CASE("event query validation") {
    SimConfig cfg;
    cfg.t_max = 2.0;
    const ModelSpec m = model_extinct();
    REQUIRE_THROWS_AS(estimate_event_prob(m, cfg, 0.5, {EventQueryKind::absorbed_by, 1.0}, 50),
                      std::domain_error);
    REQUIRE_THROWS_AS(estimate_event_prob(m, cfg, 0.5, {EventQueryKind::absorbed_by, 3.0}, 300),
                      std::domain_error);
    SimConfig stopped = cfg;
    stopped.stop_below = 0.1;
    REQUIRE_THROWS_AS(
        estimate_event_prob(m, stopped, 0.5, {EventQueryKind::absorbed_by, 1.0}, 300),
        std::domain_error);
}

TEST_CASE("survival curve is nonincreasing and thread-count invariant") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.seed = 19;
    const ModelSpec m = model_extinct();
    const std::vector<double> times{0.5, 1.0, 2.0, 3.0};
    const auto sc1 = survival_curve(m, cfg, 0.5, times, 400, 1);
    const auto sc2 = survival_curve(m, cfg, 0.5, times, 400, 3);
    REQUIRE(sc1.p_hat == sc2.p_hat);
    REQUIRE(sc1.n_alive == sc2.n_alive);
    REQUIRE(sc1.times.size() == 4);
    for (std::size_t i = 1; i < sc1.p_hat.size(); ++i)
        REQUIRE(sc1.p_hat[i] <= sc1.p_hat[i - 1]);
    REQUIRE(sc1.exploded == 0);
    REQUIRE_THROWS_AS(survival_curve(m, cfg, 0.5, {}, 400), std::domain_error);
    REQUIRE_THROWS_AS(survival_curve(m, cfg, 0.5, {0.0, 1.0}, 400), std::domain_error);
}

TEST_CASE("decay fit refuses a curve with too few surviving points") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.seed = 23;
    // by t = 25 essentially no path of 200 is still alive for this model
    REQUIRE_THROWS_AS(survival_decay_fit(model_extinct(), cfg, 0.5, {25.0, 26.0, 27.0, 28.0}, 0.0,
                                         200),
                      TooFewSurvivorsError);
    REQUIRE_THROWS_AS(survival_decay_fit(model_extinct(), cfg, 0.5, {1.0, 2.0, 3.0}, 0.0, 200),
                      std::domain_error);
}

TEST_CASE("stationary snapshot reports moments, residual, and a ks diagnostic") {
    // g = 2x, sigma2 = x^2, r = 1 + x, Theta = 1/2: ergodic with known
    // stationary identity E[g(X)] = E[X r(X)] / 2
    const ModelSpec m = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                    CoefficientFn::zero(), CoefficientFn::affine(1.0, 1.0),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 2e-3;
    cfg.seed = 3;
    const auto rep = stationary_estimate(m, cfg, 1.0, 1.0, 6.0, 400);
    REQUIRE(rep.alive_end > 300);  // absorption is impossible here
    REQUIRE(rep.t_cmp == 9.0);
    REQUIRE(rep.mean.mean > 0.0);
    REQUIRE(rep.moment_ratio > 0.0);
    REQUIRE(rep.ks >= 0.0);
    REQUIRE(rep.ks <= 1.0);
    // the drift residual has stationary mean zero; allow 4 standard errors
    REQUIRE(std::fabs(rep.residual.mean) <= 4.0 * rep.residual.se);
    bool noted = false;
    for (const auto& nrow : rep.notes)
        if (nrow.find("t_burn recorded as metadata") != std::string::npos) noted = true;
    REQUIRE(noted);

    REQUIRE_THROWS_AS(stationary_estimate(m, cfg, 1.0, 6.0, 6.0, 400), std::domain_error);
    REQUIRE_THROWS_AS(stationary_estimate(m, cfg, 1.0, -1.0, 6.0, 400), std::domain_error);
}

TEST_CASE("stationary snapshot raises when every path dies first") {
    const ModelSpec m = build_model(CoefficientFn::affine(-5.0, 0.0), CoefficientFn::zero(),
                                    CoefficientFn::zero(), CoefficientFn::zero(),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    REQUIRE_THROWS_AS(stationary_estimate(m, cfg, 0.5, 0.0, 2.0, 200), AllAbsorbedError);
}

TEST_CASE("observable parser accepts the two families and rejects junk") {
    const auto ind = ObservableFn::parse("indicator(0.5, 2)");
    REQUIRE(ind.kind == ObservableFn::Kind::indicator);
    REQUIRE(ind(1.0) == 1.0);
    REQUIRE(ind(0.5) == 0.0);  // open interval
    REQUIRE(ind(3.0) == 0.0);
    const auto clip = ObservableFn::parse("clip(0, 10)");
    REQUIRE(clip(-1.0) == 0.0);
    REQUIRE(clip(3.0) == 3.0);
    REQUIRE(clip(11.0) == 10.0);
    const auto open = ObservableFn::parse("indicator(0, inf)");
    REQUIRE(open(1e300) == 1.0);
    REQUIRE_THROWS_AS(ObservableFn::parse("indicator(1)"), ConfigError);
    REQUIRE_THROWS_AS(ObservableFn::parse("median(0, 1)"), ConfigError);
    REQUIRE_THROWS_AS(ObservableFn::parse("clip(2, 1)"), ConfigError);
}

TEST_CASE("ergodic average on frozen dynamics is exact") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    const auto rep =
        ergodic_average(frozen_model(), cfg, 1.0, ObservableFn::parse("indicator(0.5, 2)"), 2.0);
    REQUIRE(rep.value == Catch::Approx(1.0).margin(1e-12));
    REQUIRE_FALSE(rep.partial);
    REQUIRE(rep.outcome == OutcomeKind::ran_to_horizon);
    REQUIRE(rep.t_elapsed == 2.0);
}

TEST_CASE("ergodic average completes an absorbed window with f(0)") {
    // x(t) = 0.5 - 5t hits zero at t = 0.1; the left-endpoint integral of
    // clip(0,10) over [0, 0.1] is 0.02525 at dt = 1e-3, and 0 afterwards
    const ModelSpec m = build_model(CoefficientFn::affine(-5.0, 0.0), CoefficientFn::zero(),
                                    CoefficientFn::zero(), CoefficientFn::zero(),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    const auto rep = ergodic_average(m, cfg, 0.5, ObservableFn::parse("clip(0, 10)"), 1.0);
    REQUIRE(rep.outcome == OutcomeKind::absorbed);
    REQUIRE_FALSE(rep.partial);
    REQUIRE(rep.value == Catch::Approx(0.02525).margin(1e-9));
    REQUIRE_FALSE(rep.note.empty());
}

TEST_CASE("ergodic average over an exploding path is flagged partial") {
    const ModelSpec m = build_model(CoefficientFn::power(1.0, 3.0), CoefficientFn::zero(),
                                    CoefficientFn::zero(), CoefficientFn::zero(),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.x_max = 1e6;
    const auto rep = ergodic_average(m, cfg, 10.0, ObservableFn::parse("clip(0, 1)"), 1.0);
    REQUIRE(rep.outcome == OutcomeKind::exploded);
    REQUIRE(rep.partial);
    REQUIRE(rep.t_elapsed < 1.0);
}

TEST_CASE("martingale check pins t = 0 and holds on a constant-criterion model") {
    const ModelSpec m = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                    CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    cfg.seed = 13;
    const auto rep = martingale_check(m, cfg, 1.0, 2.0, 0.1, 10.0, {0.0, 0.5}, 500);
    REQUIRE(rep.target == 1.0);
    REQUIRE(rep.checkpoints.front() == 0.0);
    REQUIRE(rep.z.front().mean == rep.target);
    REQUIRE(rep.z.front().se == 0.0);
    REQUIRE(rep.within.size() == 2);
    REQUIRE(rep.within[0]);
    INFO("z(0.5) = " << rep.z[1].mean << " +- " << rep.z[1].se);
    REQUIRE(rep.ok);

    // thread-count invariance of the estimates
    const auto rep3 = martingale_check(m, cfg, 1.0, 2.0, 0.1, 10.0, {0.0, 0.5}, 500, 3);
    REQUIRE(rep3.z[1].mean == rep.z[1].mean);
    REQUIRE(rep3.z[1].se == rep.z[1].se);
}

TEST_CASE("martingale check validates its corridor and checkpoints") {
    const ModelSpec m = model_extinct();
    SimConfig cfg;
    cfg.t_max = 1.0;
    REQUIRE_THROWS_AS(martingale_check(m, cfg, 0.05, 2.0, 0.1, 10.0, {0.5}, 500),
                      std::domain_error);
    REQUIRE_THROWS_AS(martingale_check(m, cfg, 1.0, 2.0, 0.1, 0.5, {0.5}, 500),
                      std::domain_error);
    REQUIRE_THROWS_AS(martingale_check(m, cfg, 1.0, 2.0, 0.1, 10.0, {}, 500), std::domain_error);
    REQUIRE_THROWS_AS(martingale_check(m, cfg, 1.0, 2.0, 0.1, 10.0, {0.0}, 500),
                      std::domain_error);
    REQUIRE_THROWS_AS(martingale_check(m, cfg, 1.0, 2.0, 0.1, 10.0, {0.5}, 50), std::domain_error);
    REQUIRE_THROWS_AS(martingale_check(m, cfg, 1.0, 1.0, 0.1, 10.0, {0.5}, 500),
                      std::domain_error);
}

TEST_CASE("experiment digest tracks definitions, not seeds") {
    const ModelSpec m = model_extinct();
    SimConfig a;
    a.dt = 1e-3;
    a.seed = 1;
    SimConfig b = a;
    b.seed = 99;
    REQUIRE(sim_digest(m, a) == sim_digest(m, b));
    SimConfig c = a;
    c.dt = 2e-3;
    REQUIRE(sim_digest(m, a) != sim_digest(m, c));
    REQUIRE(sim_digest(m, a, "op=x") != sim_digest(m, a, "op=y"));
    REQUIRE(sim_digest(m, a) != sim_digest(frozen_model(), a));
}
