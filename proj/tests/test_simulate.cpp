#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/simulate.hpp"

using namespace branchcat;

namespace {

ModelSpec frozen_model() {
    return build_model(CoefficientFn::zero(), CoefficientFn::zero(), CoefficientFn::zero(),
                       CoefficientFn::zero(), JumpMeasure::zero(), FragmentationKernel::atom(0.5));
}

ModelSpec drift_only(double c) {
    return build_model(CoefficientFn::linear(c), CoefficientFn::zero(), CoefficientFn::zero(),
                       CoefficientFn::zero(), JumpMeasure::zero(), FragmentationKernel::atom(0.5));
}

ModelSpec catastrophe_only(double rate, double theta) {
    return build_model(CoefficientFn::zero(), CoefficientFn::zero(), CoefficientFn::zero(),
                       CoefficientFn::affine(rate, 0.0), JumpMeasure::zero(),
                       FragmentationKernel::atom(theta));
}

}  // namespace

TEST_CASE("all-zero dynamics hold the state constant on the macro lattice") {
    SimConfig cfg;
    cfg.dt = 0.1;
    cfg.t_max = 1.0;
    const auto rec = simulate_path(frozen_model(), cfg, 1.0);
    REQUIRE(rec.outcome == OutcomeKind::ran_to_horizon);
    REQUIRE(rec.times.size() == 11);
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        REQUIRE(rec.times[i] == Catch::Approx(0.1 * static_cast<double>(i)).margin(1e-15));
        REQUIRE(rec.states[i] == 1.0);
    }
    REQUIRE(rec.substeps == 10);
    REQUIRE(rec.events.empty());
    REQUIRE(rec.x_final == 1.0);
    REQUIRE(rec.t_final == 1.0);
}

TEST_CASE("pure linear drift reproduces exponential growth to Euler accuracy") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    const auto rec = simulate_path(drift_only(1.0), cfg, 1.0);
    REQUIRE(rec.outcome == OutcomeKind::ran_to_horizon);
    REQUIRE(rec.x_final == Catch::Approx(std::exp(1.0)).epsilon(5.0 * cfg.dt));
    // strictly increasing record times
    for (std::size_t i = 1; i < rec.times.size(); ++i) REQUIRE(rec.times[i] > rec.times[i - 1]);
}

TEST_CASE("catastrophe thinning matches the Poisson limit") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    const int n = 10000;
    int no_event = 0;
    double mean_x = 0.0;
    const ModelSpec m = catastrophe_only(1.0, 0.5);
    for (int k = 0; k < n; ++k) {
        cfg.seed = 42;
        const auto rec = simulate_path(m, cfg, 1.0, static_cast<std::uint64_t>(k));
        if (rec.events.empty()) ++no_event;
        mean_x += rec.x_final;
    }
    mean_x /= n;
    // P(no catastrophe by t=1) = e^-1, E[2^-N] = e^-1/2, both up to O(dt) bias
    REQUIRE(static_cast<double>(no_event) / n ==
            Catch::Approx(std::exp(-1.0)).margin(0.020));
    REQUIRE(mean_x == Catch::Approx(std::exp(-0.5)).margin(0.015));
}

TEST_CASE("identical seed and path index give bitwise identical paths") {
    const ModelSpec m = build_model(
        CoefficientFn::linear(0.5), CoefficientFn::linear(0.2), CoefficientFn::linear(0.3),
        CoefficientFn::affine(0.5, 0.0), JumpMeasure::exponential(1.0, 1.0),
        FragmentationKernel::beta(2.0, 2.0));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 0.5;
    cfg.seed = 7;
    const auto a = simulate_path(m, cfg, 1.0, 3);
    const auto b = simulate_path(m, cfg, 1.0, 3);
    REQUIRE(a.times == b.times);
    REQUIRE(a.states == b.states);
    REQUIRE(a.events.size() == b.events.size());
    REQUIRE(a.x_final == b.x_final);
    REQUIRE(a.substeps == b.substeps);

    const auto c = simulate_path(m, cfg, 1.0, 4);
    REQUIRE(a.states != c.states);
}

TEST_CASE("stop level crossings are stamped at the exact substep") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 10.0;
    cfg.seed = 11;
    cfg.stop_below = 0.6;
    const auto rec = simulate_path(catastrophe_only(2.0, 0.5), cfg, 1.0);
    REQUIRE(rec.outcome == OutcomeKind::stopped_low);
    REQUIRE(rec.events.size() == 1);  // the very first halving ends the path
    REQUIRE(rec.tau_low.has_value());
    REQUIRE(*rec.tau_low == rec.events[0].t);
    REQUIRE(rec.x_final == 0.5);

    const auto stored = hitting_times(rec, 0.6, std::nullopt);
    REQUIRE(stored.tau_minus.has_value());
    REQUIRE(*stored.tau_minus == *rec.tau_low);
    // a different level falls back to the record scan and lands on the same row
    const auto scanned = hitting_times(rec, 0.55, std::nullopt);
    REQUIRE(scanned.tau_minus.has_value());
    REQUIRE(*scanned.tau_minus == rec.events[0].t);

    REQUIRE_THROWS_AS(hitting_times(rec, -1.0, std::nullopt), std::domain_error);
    REQUIRE_THROWS_AS(hitting_times(rec, 2.0, 1.0), std::domain_error);
}

TEST_CASE("upward stop levels end the path above the barrier") {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 2.0;
    cfg.stop_above = 5.0;
    const auto rec = simulate_path(drift_only(2.0), cfg, 1.0);
    REQUIRE(rec.outcome == OutcomeKind::stopped_high);
    REQUIRE(rec.tau_high.has_value());
    REQUIRE(*rec.tau_high == Catch::Approx(0.5 * std::log(5.0)).margin(0.01));
    REQUIRE(rec.x_final > 5.0);
}

TEST_CASE("criterion accumulator integrates exactly when the criterion is constant") {
    // g = 2x, sigma2 = x^2, r = 1, Theta = 1/2 makes the a = 2 criterion -1
    const ModelSpec m = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                    CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    cfg.seed = 5;
    cfg.ga_exponent = 2.0;
    const auto rec = simulate_path(m, cfg, 1.0);
    REQUIRE(rec.outcome == OutcomeKind::ran_to_horizon);
    REQUIRE(rec.ga.size() == rec.times.size());
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        REQUIRE(rec.ga[i] == Catch::Approx(-rec.times[i]).margin(5e-12));
    for (double t_stop : {0.25, 0.5, 1.0})
        REQUIRE(accumulate_Ga(m, rec, 2.0, t_stop) == Catch::Approx(-t_stop).margin(5e-12));
    REQUIRE_THROWS_AS(accumulate_Ga(m, rec, 2.0, -1.0), std::domain_error);
}

TEST_CASE("events record their exact before/after states") {
    const ModelSpec m = build_model(
        CoefficientFn::linear(0.1), CoefficientFn::linear(0.5), CoefficientFn::affine(2.0, 0.0),
        CoefficientFn::affine(2.0, 0.0), JumpMeasure::atoms({{0.7, 1.0}}),
        FragmentationKernel::beta(2.0, 2.0));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 3.0;
    cfg.seed = 17;
    const auto rec = simulate_path(m, cfg, 1.0);
    bool saw_jump = false, saw_cat = false;
    for (const auto& e : rec.events) {
        if (e.kind == EventKind::positive_jump) {
            saw_jump = true;
            REQUIRE(e.magnitude == 0.7);
            REQUIRE(e.after == e.before + e.magnitude);
        } else {
            saw_cat = true;
            REQUIRE(e.magnitude > 0.0);
            REQUIRE(e.magnitude <= 1.0);
            REQUIRE(e.after == e.before * e.magnitude);
        }
    }
    REQUIRE(saw_jump);
    REQUIRE(saw_cat);
}

TEST_CASE("hard downward drift is absorbed at zero, never negative") {
    const ModelSpec m = build_model(CoefficientFn::affine(-5.0, 0.0), CoefficientFn::zero(),
                                    CoefficientFn::zero(), CoefficientFn::zero(),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    const auto rec = simulate_path(m, cfg, 0.5);
    REQUIRE(rec.outcome == OutcomeKind::absorbed);
    REQUIRE(rec.x_final == 0.0);
    REQUIRE(rec.t_final == Catch::Approx(0.1).margin(2e-3));
    for (double x : rec.states) REQUIRE(x >= 0.0);
    REQUIRE(rec.states.back() == 0.0);
}

TEST_CASE("an initial state at the absorption threshold terminates immediately") {
    SimConfig cfg;
    const auto rec = simulate_path(frozen_model(), cfg, 0.0);
    REQUIRE(rec.outcome == OutcomeKind::absorbed);
    REQUIRE(rec.t_final == 0.0);
    REQUIRE(rec.times.size() == 1);
    REQUIRE(rec.states[0] == 0.0);
    REQUIRE(rec.substeps == 0);
}

TEST_CASE("superlinear drift explodes through the cap") {
    const ModelSpec m = build_model(CoefficientFn::power(1.0, 3.0), CoefficientFn::zero(),
                                    CoefficientFn::zero(), CoefficientFn::zero(),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 5.0;
    cfg.x_max = 1e6;
    const auto rec = simulate_path(m, cfg, 10.0);
    REQUIRE(rec.outcome == OutcomeKind::exploded);
    REQUIRE(rec.x_final >= 1e6);
    REQUIRE(rec.t_final < 1.0);
}

TEST_CASE("compensated jumps preserve the mean") {
    const ModelSpec m = build_model(CoefficientFn::zero(), CoefficientFn::zero(),
                                    CoefficientFn::affine(1.0, 0.0), CoefficientFn::zero(),
                                    JumpMeasure::atoms({{1.0, 1.0}}),
                                    FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    cfg.seed = 29;
    const int n = 2000;
    double mean = 0.0;
    for (int k = 0; k < n; ++k)
        mean += simulate_path(m, cfg, 5.0, static_cast<std::uint64_t>(k)).x_final;
    mean /= n;
    REQUIRE(mean == Catch::Approx(5.0).margin(0.1));
}

TEST_CASE("record stride thins macro rows without touching the dynamics") {
    SimConfig fine;
    fine.dt = 1e-3;
    fine.t_max = 1.0;
    fine.seed = 3;
    SimConfig coarse = fine;
    coarse.record_stride = 10;
    const ModelSpec m = drift_only(1.0);
    const auto a = simulate_path(m, fine, 1.0);
    const auto b = simulate_path(m, coarse, 1.0);
    REQUIRE(b.times.size() == 101);
    REQUIRE(a.x_final == b.x_final);
    // every thinned row appears identically in the dense record
    std::size_t j = 0;
    for (std::size_t i = 0; i < b.times.size(); ++i) {
        while (j < a.times.size() && a.times[j] != b.times[i]) ++j;
        REQUIRE(j < a.times.size());
        REQUIRE(a.states[j] == b.states[i]);
    }
}

TEST_CASE("configuration validation rejects inconsistent settings") {
    const ModelSpec m = frozen_model();
    SimConfig cfg;
    cfg.dt = 0.0;
    REQUIRE_THROWS_AS(simulate_path(m, cfg, 1.0), std::domain_error);
    cfg = {};
    cfg.dt = 2.0;  // >= t_max
    REQUIRE_THROWS_AS(simulate_path(m, cfg, 1.0), std::domain_error);
    cfg = {};
    cfg.x_abs = 2e12;  // >= x_max
    REQUIRE_THROWS_AS(simulate_path(m, cfg, 1.0), std::domain_error);
    cfg = {};
    cfg.record_stride = 0;
    REQUIRE_THROWS_AS(simulate_path(m, cfg, 1.0), std::domain_error);
    cfg = {};
    cfg.stop_below = 2.0;
    cfg.stop_above = 1.0;
    REQUIRE_THROWS_AS(simulate_path(m, cfg, 1.0), std::domain_error);
    cfg = {};
    REQUIRE_THROWS_AS(simulate_path(m, cfg, -1.0), std::domain_error);
}

TEST_CASE("an untameable event rate raises with the offending path index") {
    const ModelSpec m = build_model(CoefficientFn::zero(), CoefficientFn::zero(),
                                    CoefficientFn::zero(), CoefficientFn::power(1e300, 2.0),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    try {
        simulate_path(m, cfg, 10.0, 37);
        FAIL("expected NonFiniteStateError");
    } catch (const NonFiniteStateError& e) {
        REQUIRE(e.path_index == 37);
    }
}
