#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "branchcat/criteria.hpp"
#include "branchcat/errors.hpp"
#include "branchcat/model.hpp"
#include "branchcat/quadrature.hpp"

using namespace branchcat;
using namespace branchcat::quad;

namespace {

ModelSpec with_pi(JumpMeasure pi) {
    return build_model(CoefficientFn::linear(1.0), CoefficientFn::linear(1.0),
                       CoefficientFn::linear(1.0), CoefficientFn::affine(1.0, 0.0), std::move(pi),
                       FragmentationKernel::atom(0.5));
}

// Independent reference for the jump tail functionals, built from the integral
// remainder of a second-order Taylor expansion:
//   f_a(w) = a w^2 int_0^1 (1-v) (1+wv)^(-1-a) dv
// evaluated with plain pow and nested adaptive quadrature. No shared code with
// the expm1/log1p/series path under test.
double oracle_Ia(const JumpMeasure& pi, double x, double a) {
    return pi.integrate(
        [&](double z) {
            const double w = z / x;
            const double inner = integrate(
                [&](double v) { return (1.0 - v) * std::pow(1.0 + w * v, -1.0 - a); }, 0.0, 1.0,
                1e-12);
            return a * w * w * inner;
        },
        1e-11);
}

double oracle_I(const JumpMeasure& pi, double x) {
    return pi.integrate(
        [&](double z) {
            const double w = z / x;
            const double inner = integrate(
                [&](double v) { return (1.0 - v) * std::pow(1.0 + w * v, -2.0); }, 0.0, 1.0,
                1e-12);
            return w * w * inner;
        },
        1e-11);
}

}  // namespace

TEST_CASE("jump tail functionals match the quadrature oracle") {
    const JumpMeasure measures[] = {JumpMeasure::atoms({{1.0, 1.0}}),
                                    JumpMeasure::exponential(1.0, 1.0),
                                    JumpMeasure::trpower(2.0, 2.5, 1.0, 4.0)};
    for (const auto& pi : measures) {
        const ModelSpec m = with_pi(pi);
        for (double x : {0.1, 1.0, 2.0, 10.0}) {
            for (double a : {1.001, 1.5, 2.0}) {
                INFO(pi.to_string() << " x=" << x << " a=" << a);
                REQUIRE(eval_I_a(m, x, a) == Catch::Approx(oracle_Ia(pi, x, a)).epsilon(1e-6));
            }
            REQUIRE(eval_I(m, x) == Catch::Approx(oracle_I(pi, x)).epsilon(1e-6));
        }
    }
}

TEST_CASE("jump tail functionals hit frozen reference values") {
    const ModelSpec at = with_pi(JumpMeasure::atoms({{1.0, 1.0}}));
    REQUIRE(eval_I(at, 0.1) == Catch::Approx(7.60210472720162946).epsilon(1e-12));
    REQUIRE(eval_I(at, 1.0) == Catch::Approx(0.306852819440054691).epsilon(1e-12));
    REQUIRE(eval_I(at, 2.0) == Catch::Approx(0.094534891891835618).epsilon(1e-12));
    REQUIRE(eval_I(at, 10.0) == Catch::Approx(0.00468982019567513996).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 0.1, 1.001) == Catch::Approx(7.60497738150448058).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 0.1, 1.01) == Catch::Approx(7.63062581250509872).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 0.1, 1.1) == Catch::Approx(7.86793442196772235).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 1.0, 1.001) == Catch::Approx(0.307092990452521922).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 1.0, 1.01) == Catch::Approx(0.309249543703590153).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 1.0, 1.1) == Catch::Approx(0.33032991536807416).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 1.0, 2.0) == Catch::Approx(0.5).epsilon(1e-14));
    REQUIRE(eval_I_a(at, 10.0, 1.001) == Catch::Approx(0.00469436206656564985).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 10.0, 1.01) == Catch::Approx(0.00473522592097499322).epsilon(1e-12));
    REQUIRE(eval_I_a(at, 10.0, 1.1) == Catch::Approx(0.00514258214521782563).epsilon(1e-12));

    const ModelSpec ex = with_pi(JumpMeasure::exponential(1.0, 1.0));
    REQUIRE(eval_I(ex, 0.1) == Catch::Approx(7.98535745529154832).epsilon(1e-9));
    REQUIRE(eval_I(ex, 1.0) == Catch::Approx(0.403652637676805926).epsilon(1e-9));
    REQUIRE(eval_I(ex, 10.0) == Catch::Approx(0.00843666606021191812).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 0.1, 1.001) == Catch::Approx(7.98780007777063992).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 0.1, 1.01) == Catch::Approx(8.00958889035972101).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 0.1, 1.1) == Catch::Approx(8.20949441940462659).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 1.0, 1.001) == Catch::Approx(0.403918506311598782).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 1.0, 1.01) == Catch::Approx(0.406302643506332468).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 1.0, 1.1) == Catch::Approx(0.429310663498575112).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 10.0, 1.001) == Catch::Approx(0.00844443579175405646).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 10.0, 1.01) == Catch::Approx(0.00851430791659880416).epsilon(1e-9));
    REQUIRE(eval_I_a(ex, 10.0, 1.1) == Catch::Approx(0.00920757947576199128).epsilon(1e-9));

    const ModelSpec tp = with_pi(JumpMeasure::trpower(2.0, 2.5, 1.0, 4.0));
    REQUIRE(eval_I_a(tp, 2.0, 1.5) == Catch::Approx(0.68351567011807536).epsilon(1e-9));
    REQUIRE(eval_I(tp, 2.0) == Catch::Approx(0.5077997969093433).epsilon(1e-9));
}

TEST_CASE("I_a exceeds I, increases in a, and the gap is second order") {
    for (const auto& pi :
         {JumpMeasure::atoms({{1.0, 1.0}}), JumpMeasure::exponential(1.0, 1.0)}) {
        const ModelSpec m = with_pi(pi);
        const double m2 = pi.m2();
        for (double x : {0.1, 1.0, 10.0}) {
            const double base = eval_I(m, x);
            REQUIRE(base >= 0.0);
            double prev = base;
            for (double a : {1.001, 1.01, 1.1, 1.5, 2.0}) {
                const double v = eval_I_a(m, x, a);
                REQUIRE(v > prev);
                prev = v;
            }
            for (double eps : {0.001, 0.01, 0.1}) {
                const double gap = eval_I_a(m, x, 1.0 + eps) - base;
                REQUIRE(gap > 0.0);
                REQUIRE(gap <= 10.0 * eps * m2 / (x * x));
            }
        }
    }
}

TEST_CASE("criterion terms sum to the reported value") {
    const ModelSpec m = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                    CoefficientFn::linear(1.0), CoefficientFn::affine(1.0, 1.0),
                                    JumpMeasure::exponential(1.0, 1.0),
                                    FragmentationKernel::atom(0.5));
    for (double x : {0.3, 1.0, 7.0}) {
        const auto pt = eval_G_a(m, x, 1.5);
        REQUIRE(pt.value ==
                pt.terms.growth + pt.terms.diffusion + pt.terms.catastrophe + pt.terms.jump);
        REQUIRE(pt.terms.jump < 0.0);
        const auto ph = eval_H(m, x);
        REQUIRE(ph.value ==
                ph.terms.growth + ph.terms.diffusion + ph.terms.catastrophe + ph.terms.jump);
        REQUIRE(ph.a == 1.0);
    }
}

TEST_CASE("constant-criterion model evaluates to -1 everywhere") {
    // g = 2x, sigma2 = x^2, r = 1, Theta = 1/2: at a = 2 the three active terms
    // are +2, -2, -1 at every x
    const ModelSpec m = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                    CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0),
                                    JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    for (double x : {0.01, 0.5, 1.0, 3.0, 250.0}) {
        REQUIRE(eval_G_a(m, x, 2.0).value == Catch::Approx(-1.0).margin(1e-12));
    }
}

TEST_CASE("limit criterion at a frozen point") {
    const ModelSpec m1 = build_model(CoefficientFn::linear(0.1), CoefficientFn::linear(1.0),
                                     CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0),
                                     JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    REQUIRE(eval_H(m1, 10.0).value == Catch::Approx(-0.693147180559945309).epsilon(1e-13));
}

TEST_CASE("G_a / (a-1) converges to H as a approaches 1") {
    const ModelSpec plain = build_model(CoefficientFn::linear(0.1), CoefficientFn::linear(1.0),
                                        CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0),
                                        JumpMeasure::zero(), FragmentationKernel::atom(0.5));
    const ModelSpec jumpy = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                        CoefficientFn::linear(1.0), CoefficientFn::affine(1.0, 1.0),
                                        JumpMeasure::exponential(1.0, 1.0),
                                        FragmentationKernel::beta(2.0, 3.0));
    for (const ModelSpec* m : {&plain, &jumpy}) {
        for (double x : {0.5, 1.0, 5.0}) {
            const double h = eval_H(*m, x).value;
            for (double a : {1.0 + 1e-4, 1.0 - 1e-4}) {
                const double scaled = eval_G_a(*m, x, a).value / (a - 1.0);
                REQUIRE(scaled == Catch::Approx(h).epsilon(1e-3));
            }
        }
    }
}

TEST_CASE("admissible exponent set tracks kernel moment finiteness") {
    const auto uni = FragmentationKernel::uniform();
    REQUIRE(in_moment_set(uni, 1.9));
    REQUIRE_FALSE(in_moment_set(uni, 2.0));
    REQUIRE_FALSE(in_moment_set(uni, 0.5));  // needs a > 1
    REQUIRE(in_moment_set(FragmentationKernel::atom(0.5), 50.0));

    const ModelSpec m = build_model(CoefficientFn::linear(1.0), CoefficientFn::linear(1.0),
                                    CoefficientFn::zero(), CoefficientFn::affine(1.0, 0.0),
                                    JumpMeasure::zero(), uni);
    REQUIRE_NOTHROW(eval_G_a(m, 1.0, 1.9));
    REQUIRE_THROWS_AS(eval_G_a(m, 1.0, 2.0), InfiniteMomentError);
    REQUIRE_THROWS_AS(GaEvaluator(m, 2.0), InfiniteMomentError);
}

TEST_CASE("exponent and state validation") {
    const ModelSpec m = with_pi(JumpMeasure::atoms({{1.0, 1.0}}));
    REQUIRE_THROWS_AS(eval_G_a(m, 1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(eval_G_a(m, 1.0, 1.0 + 1e-7), std::domain_error);
    REQUIRE_THROWS_AS(eval_G_a(m, 1.0, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(eval_G_a(m, 1.0, -1.0), std::domain_error);
    REQUIRE_THROWS_AS(eval_G_a(m, 0.0, 1.5), std::domain_error);
    REQUIRE_THROWS_AS(eval_I_a(m, -1.0, 1.5), std::domain_error);
    REQUIRE_THROWS_AS(eval_H(m, 0.0), std::domain_error);

    const ModelSpec heavy =
        with_pi(JumpMeasure::trpower(1.0, 1.5, 1.0, std::numeric_limits<double>::infinity()));
    REQUIRE_THROWS_AS(eval_I(heavy, 1.0), InfiniteMomentError);
    REQUIRE_THROWS_AS(eval_I_a(heavy, 1.0, 1.5), InfiniteMomentError);
}

TEST_CASE("series and direct branches agree across the small-w seam") {
    // single atom at z = 1, so x slightly above/below 1000 places w = z/x on
    // either side of the 1e-3 switch; both sides must track the oracle
    const auto pi = JumpMeasure::atoms({{1.0, 1.0}});
    const ModelSpec m = with_pi(pi);
    for (double a : {1.001, 1.5, 2.0, 5.0}) {
        for (double x : {990.0, 999.999, 1000.0, 1000.001, 1010.0}) {
            INFO("a=" << a << " x=" << x);
            REQUIRE(eval_I_a(m, x, a) == Catch::Approx(oracle_Ia(pi, x, a)).epsilon(1e-9));
        }
        REQUIRE(eval_I(m, 999.999) == Catch::Approx(oracle_I(pi, 999.999)).epsilon(1e-9));
        REQUIRE(eval_I(m, 1000.001) == Catch::Approx(oracle_I(pi, 1000.001)).epsilon(1e-9));
    }
}

TEST_CASE("precomputed evaluator agrees with the direct form") {
    const ModelSpec m = build_model(CoefficientFn::linear(2.0), CoefficientFn::power(1.0, 2.0),
                                    CoefficientFn::linear(1.0), CoefficientFn::affine(1.0, 1.0),
                                    JumpMeasure::exponential(1.0, 1.0),
                                    FragmentationKernel::atom(0.5));
    const GaEvaluator ga(m, 1.5);
    REQUIRE(ga.a() == 1.5);
    for (double x : {0.1, 1.0, 3.0, 40.0}) {
        REQUIRE(ga(x) == Catch::Approx(eval_G_a(m, x, 1.5).value).epsilon(1e-13));
    }
}
