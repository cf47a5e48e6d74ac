#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ammnet/core.hpp"

using namespace ammnet;

TEST_CASE("evaluate closed forms") {
    CHECK(evaluate(AmmDef::constant_product(2, 1.0), Vec{2.0, 0.5}) == 0.0);
    CHECK(evaluate(AmmDef::constant_product(3, 8.0), Vec{2.0, 2.0, 2.0}) == 0.0);
    CHECK(evaluate(AmmDef::linear(Vec{1.0, 1.0}, 3.0), Vec{1.0, 1.0}) == -1.0);
    CHECK(evaluate(AmmDef::constant_mean(Vec{2.0, 1.0}, 0.75), Vec{1.0, 0.75}) ==
          doctest::Approx(0.0));
}

TEST_CASE("evaluate rejects bad inputs") {
    const AmmDef cp = AmmDef::constant_product(2, 1.0);
    CHECK_THROWS_AS(evaluate(cp, Vec{1.0, 1.0, 1.0}), AmmError);
    CHECK_THROWS_AS(evaluate(cp, Vec{1.0, -1.0}), AmmError);
    CHECK_THROWS_AS(evaluate(cp, Vec{1.0, 0.0}), AmmError);
    CHECK_THROWS_AS(AmmDef::constant_product(1, 1.0), AmmError);
    CHECK_THROWS_AS(AmmDef::constant_product(2, -1.0), AmmError);
}

TEST_CASE("gradient closed forms") {
    CHECK(gradient(AmmDef::constant_product(2, 1.0), Vec{1.0, 1.0}) == Vec{1.0, 1.0});
    CHECK(gradient(AmmDef::constant_product(3, 8.0), Vec{2.0, 2.0, 2.0}) ==
          Vec{4.0, 4.0, 4.0});
    CHECK(gradient(AmmDef::linear(Vec{2.0, 3.0}, 5.0), Vec{7.0, 0.1}) == Vec{2.0, 3.0});
}

TEST_CASE("analytic gradients agree with finite differences") {
    Rng rng(11);
    const Tolerances& tol = default_tol();
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.1, 100.0));
        const int pick = static_cast<int>(rng.integer(3));
        if (pick == 1) {
            Vec w(n);
            for (double& wi : w) wi = rng.log_uniform(0.5, 3.0);
            def = AmmDef::constant_mean(std::move(w), rng.log_uniform(0.1, 100.0));
        } else if (pick == 2) {
            Vec r(n);
            for (double& ri : r) ri = rng.log_uniform(0.5, 3.0);
            def = AmmDef::linear(std::move(r), rng.log_uniform(0.1, 100.0));
        }
        Vec x(n);
        for (double& xi : x) xi = rng.log_uniform(0.2, 5.0);
        const Vec g = gradient(def, x, tol);
        Vec fd(n);
        detail::fd_gradient(
            [&](std::span<const double> p) { return def.family_impl().evaluate(p); }, x,
            fd, tol);
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(g[i] - fd[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("implicit_solve examples") {
    CHECK(implicit_solve(AmmDef::constant_product(3, 8.0), Vec{2.0, 2.0}, 2) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(implicit_solve(AmmDef::constant_product(2, 1.0), Vec{2.0}, 1) ==
          doctest::Approx(0.5).epsilon(1e-8));
    const AmmDef eq1 = AmmDef::explicit_graph(
        2, [](std::span<const double> x) { return x[0] / (2.0 * x[0] - 1.0); }, true,
        {}, Vec{1.0, 1.0});
    CHECK(implicit_solve(eq1, Vec{1.0}, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("implicit_solve residual bound and root uniqueness") {
    Rng rng(23);
    const Tolerances& tol = default_tol();
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.1, 100.0));
        Vec fixed(n - 1);
        for (double& f : fixed) f = rng.log_uniform(0.2, 5.0);
        const double z = implicit_solve(def, fixed, n - 1, 0.0, tol);
        Vec full(fixed.begin(), fixed.end());
        full.push_back(z);
        const Vec g = gradient(def, full, tol);
        CHECK(std::abs(def.family_impl().evaluate(full)) <=
              tol.root_rel * (1.0 + norm2(g)));

        // Exactly one sign change across a wide bracket around the root.
        int sign_changes = 0;
        double prev = 0;
        for (int i = 0; i < 1000; ++i) {
            full[n - 1] = z * std::exp((i / 999.0 - 0.5) * 2.0 * std::log(50.0));
            const double a = def.family_impl().evaluate(full);
            if (i > 0 && ((prev < 0) != (a < 0))) ++sign_changes;
            prev = a;
        }
        CHECK(sign_changes == 1);
    }
}

TEST_CASE("implicit_solve reports exhaustion") {
    // lambda.x = c caps the feasible product; no positive root here.
    const AmmDef lin = AmmDef::linear(Vec{1.0, 1.0}, 3.0);
    CHECK_THROWS_AS(implicit_solve(lin, Vec{5.0}, 1), InfeasibleError);
}

TEST_CASE("trade examples") {
    const AmmInstance cp(AmmDef::constant_product(2, 1.0), StateVector({1.0, 1.0}));
    auto [next, pl] = trade(cp, Vec{1.0}, 1);
    CHECK(next.state.q[0] == 2.0);
    CHECK(next.state.q[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(pl.deltas[0] == -1.0);
    CHECK(pl.deltas[1] == doctest::Approx(0.5).epsilon(1e-8));

    auto [same, pl0] = trade(cp, Vec{0.0}, 1);
    CHECK(same.state.q[0] == 1.0);
    CHECK(same.state.q[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(pl0.deltas[0] == 0.0);
    CHECK(std::abs(pl0.deltas[1]) <= 1e-12);

    const AmmInstance cp3(AmmDef::constant_product(3, 8.0), StateVector({2.0, 2.0, 2.0}));
    auto [n3, pl3] = trade(cp3, Vec{2.0, -1.0}, 2);
    CHECK(n3.state.q == Vec{4.0, 1.0, 2.0});

    CHECK_THROWS_AS(trade(cp, Vec{-1.0}, 1), InfeasibleError);
}

TEST_CASE("trades reverse and stay on-manifold") {
    Rng rng(31);
    const Tolerances& tol = default_tol();
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.5, 20.0));
        const AmmInstance inst(def, StateVector(def.anchor()), tol);
        Vec d(n - 1);
        for (double& di : d) di = rng.uniform(-0.3, 1.5) * inst.state.q[0];
        AmmInstance moved = inst;
        try {
            moved = trade(inst, d, n - 1, tol).first;
        } catch (const InfeasibleError&) {
            continue;
        }
        CHECK(std::abs(evaluate(def, moved.state.q, tol)) <=
              manifold_residual_bound(def, moved.state.q, tol));
        Vec back(n - 1);
        for (int i = 0; i < n - 1; ++i) back[i] = -d[i];
        const AmmInstance restored = trade(moved, back, n - 1, tol).first;
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(restored.state.q[i] - inst.state.q[i]) <= 1e-9);
    }
}

TEST_CASE("check_axioms flags the documented families") {
    const Tolerances& tol = default_tol();
    Vec lo{0.25, 0.25}, hi{4.0, 4.0};

    const VerifyReport cp =
        check_axioms(AmmDef::constant_product(2, 1.0), lo, hi, 1000, 5, tol);
    CHECK(cp.failures() == 0);

    const VerifyReport lin =
        check_axioms(AmmDef::linear(Vec{1.0, 2.0}, 3.0), lo, hi, 1000, 5, tol);
    CHECK(lin.failures() > 0);
    CHECK(lin.max_residual("monotone") == 0.0);  // only convexity fails
    bool convex_failed = false;
    for (const auto& c : lin.cases)
        if (c.check_id == "convex-strict" && !c.pass) convex_failed = true;
    CHECK(convex_failed);

    // Affine graph: y = 2 - x is monotone but not strictly convex.
    const AmmDef affine = AmmDef::explicit_graph(
        2, [](std::span<const double> x) { return 2.0 - x[0]; }, false, {},
        Vec{1.0, 1.0});
    Vec alo{0.25, 0.25}, ahi{1.6, 1.6};
    const VerifyReport aff = check_axioms(affine, alo, ahi, 500, 5, tol);
    bool aff_convex_failed = false;
    for (const auto& c : aff.cases)
        if (c.check_id == "convex-strict" && !c.pass) aff_convex_failed = true;
    CHECK(aff_convex_failed);
}

TEST_CASE("check_axioms is deterministic") {
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    Vec lo(3, 0.25), hi(3, 4.0);
    VerifyReport a = check_axioms(def, lo, hi, 200, 99);
    VerifyReport b = check_axioms(def, lo, hi, 200, 99);
    a.sort();
    b.sort();
    a.suite = b.suite;
    CHECK(to_csv(a) == to_csv(b));
}

TEST_CASE("instances must sit on the manifold") {
    CHECK_THROWS_AS(
        AmmInstance(AmmDef::constant_product(3, 8.0), StateVector({2.0, 2.0, 3.0})),
        AmmError);
    CHECK_NOTHROW(
        AmmInstance(AmmDef::constant_product(3, 8.0), StateVector({2.0, 2.0, 2.0})));
}

TEST_CASE("valuations live in the open simplex") {
    CHECK_THROWS_AS(Valuation(Vec{0.5, 0.6}), AmmError);
    CHECK_THROWS_AS(Valuation(Vec{1.0, 0.0}), AmmError);
    CHECK_THROWS_AS(Valuation(Vec{-0.5, 1.5}), AmmError);
    CHECK_NOTHROW(Valuation(Vec{0.25, 0.5, 0.25}));
}
