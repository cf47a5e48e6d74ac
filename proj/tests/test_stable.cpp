#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ammnet/stable.hpp"

using namespace ammnet;

TEST_CASE("stable point examples") {
    const AmmDef unit = AmmDef::constant_product(2, 1.0);

    // Symmetric valuation pins the symmetric state.
    const StablePointResult sym =
        stable_point(unit, Valuation(Vec{0.5, 0.5}));
    CHECK(sym.state.q[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sym.state.q[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sym.lagrange_lambda > 0);

    const StablePointResult sk =
        stable_point(unit, Valuation(Vec{1.0 / 3.0, 2.0 / 3.0}));
    CHECK(sk.state.q[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(sk.state.q[1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-6));

    // Constant-mean with equal weights at a symmetric valuation.
    const AmmDef cm = AmmDef::constant_mean(Vec{1.0, 1.0, 1.0}, 8.0);
    const StablePointResult cms =
        stable_point(cm, Valuation(Vec{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}));
    for (int i = 0; i < 3; ++i)
        CHECK(cms.state.q[i] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("stable point rejects non-conforming definitions") {
    const AmmDef lin = AmmDef::linear(Vec{1.0, 1.0}, 3.0);
    CHECK_THROWS_AS(stable_point(lin, Valuation(Vec{0.5, 0.5})), AmmError);
    CHECK_THROWS_AS(valuation_of(lin, Vec{1.5, 1.5}), AmmError);
}

TEST_CASE("stable point vs grid oracle") {
    const AmmDef def = AmmDef::constant_product(2, 2.0);
    const Valuation v(Vec{0.2, 0.8});
    const StablePointResult sp = stable_point(def, v);
    // Grid spacing bounds how close the oracle can get; allow ~2 log steps.
    const StateVector oracle = brute_force_stable(def, v, 4001, 0.1, 10.0);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(sp.state.q[i] - oracle.q[i]) <=
              5e-3 * std::max(1.0, std::abs(sp.state.q[i])));
    // And the solver's cost can only be lower.
    CHECK(dot(sp.state.q, v.w) <= dot(oracle.q, v.w) + 1e-12);
}

TEST_CASE("valuation_of examples") {
    const AmmDef unit = AmmDef::constant_product(2, 1.0);
    const Valuation v = valuation_of(unit, Vec{1.0, 1.0});
    CHECK(v.w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v.w[1] == doctest::Approx(0.5).epsilon(1e-12));

    const Valuation vs = valuation_of(unit, Vec{std::sqrt(2.0), std::sqrt(0.5)});
    CHECK(vs.w[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(vs.w[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    CHECK_THROWS_AS(valuation_of(unit, Vec{2.0, 2.0}), AmmError);  // off-manifold
}

TEST_CASE("duality round trip over random families") {
    Rng rng(101);
    const Tolerances& tol = default_tol();
    for (int k = 0; k < 200; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(4));
        AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.1, 100.0));
        if (rng.uniform(0, 1) < 0.5) {
            Vec w(n);
            for (double& wi : w) wi = rng.log_uniform(0.5, 3.0);
            def = AmmDef::constant_mean(std::move(w), rng.log_uniform(0.1, 100.0));
        }
        const Valuation v = rng.valuation(n, tol);
        const StablePointResult sp = stable_point(def, v, {}, tol);
        CHECK(sp.residual_kkt <= tol.kkt);
        const Valuation back = valuation_of(def, sp.state.q, tol);
        for (int i = 0; i < n; ++i) CHECK(std::abs(back.w[i] - v.w[i]) <= 1e-6);
    }
}

TEST_CASE("Newton path agrees with the closed form") {
    Rng rng(202);
    const Tolerances& tol = default_tol();
    StableOptions no_cf;
    no_cf.allow_closed_form = false;
    Tolerances tight = tol;
    tight.kkt = 1e-11;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.2, 50.0));
        const Valuation v = rng.valuation(n, tol);
        const StablePointResult cf = stable_point(def, v, {}, tol);
        // Newton from an off-manifold perturbation of the answer; extreme
        // valuations put the stable point far from the symmetric anchor.
        Vec init = cf.state.q;
        for (size_t i = 0; i < init.size(); ++i) init[i] *= (i % 2 ? 0.8 : 1.3);
        const StablePointResult nw = stable_point(def, v, init, tight, no_cf);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(cf.state.q[i] - nw.state.q[i]) <=
                  1e-8 * std::max(1.0, std::abs(cf.state.q[i])));
    }
}

TEST_CASE("stable point minimizes cost over manifold samples") {
    Rng rng(303);
    const Tolerances& tol = default_tol();
    for (int k = 0; k < 20; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.5, 20.0));
        const Valuation v = rng.valuation(n, tol);
        const StablePointResult sp = stable_point(def, v, {}, tol);
        const double cost = dot(sp.state.q, v.w);
        for (int j = 0; j < 25; ++j) {
            Vec fixed(n - 1);
            for (double& f : fixed) f = rng.log_uniform(0.2, 5.0);
            Vec y;
            try {
                const double z = implicit_solve(def, fixed, n - 1, 0.0, tol);
                detail::splice(fixed, n - 1, z, y);
            } catch (const AmmError&) {
                continue;
            }
            CHECK(cost <= dot(y, v.w) + 1e-10 * std::abs(cost));
        }
    }
}

TEST_CASE("equivalence map examples") {
    const AmmDef cp1 = AmmDef::constant_product(2, 1.0);
    const AmmDef cp4 = AmmDef::constant_product(2, 4.0);

    // Scaling the level by 4 doubles every coordinate of the stable point.
    const StateVector m = equivalence_map(cp1, cp4, Vec{1.0, 1.0});
    CHECK(m.q[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(m.q[1] == doctest::Approx(2.0).epsilon(1e-9));

    // Identity when source and target coincide.
    const StateVector id = equivalence_map(cp1, cp1, Vec{std::sqrt(2.0), std::sqrt(0.5)});
    CHECK(id.q[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
    CHECK(id.q[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
}

TEST_CASE("equivalence map round trips and preserves valuations") {
    Rng rng(404);
    const Tolerances& tol = default_tol();
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const AmmDef a = AmmDef::constant_product(n, rng.log_uniform(0.1, 100.0));
        Vec w(n);
        for (double& wi : w) wi = rng.log_uniform(0.5, 3.0);
        const AmmDef b = AmmDef::constant_mean(std::move(w), rng.log_uniform(0.1, 100.0));
        const Valuation v = rng.valuation(n, tol);
        const StateVector x = stable_point(a, v, {}, tol).state;
        const StateVector y = equivalence_map(a, b, x.q, tol);
        const Valuation vy = valuation_of(b, y.q, tol);
        for (int i = 0; i < n; ++i) CHECK(std::abs(vy.w[i] - v.w[i]) <= 1e-6);
        const StateVector back = equivalence_map(b, a, y.q, tol);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(back.q[i] - x.q[i]) <=
                  1e-7 * std::max(1.0, norm_inf(x.q)));
    }
}

TEST_CASE("equivalence map vs grid oracle") {
    const AmmDef cp = AmmDef::constant_product(2, 1.0);
    const AmmDef cm = AmmDef::constant_mean(Vec{2.0, 1.0}, 0.75);
    const Vec x{std::sqrt(2.0), std::sqrt(0.5)};
    const StateVector y = equivalence_map(cp, cm, x);
    const Valuation v = valuation_of(cp, x);
    const StateVector oracle = brute_force_stable(cm, v, 4001, 0.05, 20.0);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(y.q[i] - oracle.q[i]) <= 5e-3);
    CHECK(dot(y.q, v.w) <= dot(oracle.q, v.w) + 1e-12);
}
