#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ammnet/operators.hpp"

using namespace ammnet;

TEST_CASE("projection examples") {
    const AmmDef cp3 = AmmDef::constant_product(3, 8.0, {"X", "Y", "Z"});

    // Fix X = 4: remaining constraint is 4yz = 8, i.e. z = 2/y.
    const AmmDef pz = project(cp3, {0}, {4.0});
    CHECK(pz.dim() == 2);
    CHECK(pz.labels() == std::vector<std::string>{"Y", "Z"});
    CHECK(evaluate(pz, Vec{1.0, 2.0}) == 0.0);
    CHECK(evaluate(pz, Vec{2.0, 1.0}) == 0.0);
    CHECK(implicit_solve(pz, Vec{4.0}, 1) == doctest::Approx(0.5).epsilon(1e-8));

    // Fix X = 2: 2yz - 8, the anchor slice.
    const AmmDef p2 = project(cp3, {0}, {2.0});
    CHECK(evaluate(p2, Vec{2.0, 2.0}) == 0.0);
    CHECK(evaluate(p2, Vec{1.0, 4.0}) == 0.0);

    // Identity projection.
    const AmmDef id = project(cp3, {}, {});
    CHECK(id.dim() == 3);
    CHECK(evaluate(id, Vec{2.0, 2.0, 2.0}) == 0.0);

    CHECK_THROWS_AS(project(cp3, {0, 1}, {2.0}), AmmError);
    CHECK_THROWS_AS(project(cp3, {0, 1}, {2.0, 2.0}), AmmError);  // 1 coord left
    CHECK_THROWS_AS(project(cp3, {5}, {2.0}), AmmError);
    CHECK_THROWS_AS(project(cp3, {0}, {-1.0}), AmmError);
}

TEST_CASE("projection preserves restricted stable points") {
    Rng rng(55);
    const Tolerances& tol = default_tol();
    for (int k = 0; k < 50; ++k) {
        const int n = 3 + static_cast<int>(rng.integer(2));
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.2, 50.0));
        const Valuation v = rng.valuation(n, tol);
        const StateVector x = stable_point(def, v, {}, tol).state;
        const AmmDef proj = project(def, {0}, {x.q[0]});
        std::vector<int> rest;
        for (int i = 1; i < n; ++i) rest.push_back(i);
        const Valuation vin = inherit_valuation(v, rest, tol);
        const StateVector y = stable_point(proj, vin, {}, tol).state;
        for (int i = 1; i < n; ++i)
            CHECK(std::abs(y.q[i - 1] - x.q[i]) <= 1e-6 * std::max(1.0, norm_inf(x.q)));
    }
}

TEST_CASE("inherit_valuation examples") {
    const Valuation v(Vec{0.5, 0.25, 0.25});
    const Valuation yz = inherit_valuation(v, {1, 2});
    CHECK(yz.w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(yz.w[1] == doctest::Approx(0.5).epsilon(1e-12));

    const Valuation xy = inherit_valuation(v, {0, 1});
    CHECK(xy.w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(xy.w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // Full subset is a permutation-aware passthrough.
    const Valuation all = inherit_valuation(v, {2, 0, 1});
    CHECK(all.w == Vec{0.25, 0.5, 0.25});

    CHECK_THROWS_AS(inherit_valuation(v, {}), AmmError);
    CHECK_THROWS_AS(inherit_valuation(v, {7}), AmmError);
}

TEST_CASE("virtualization fixture") {
    const Tolerances& tol = default_tol();
    const AmmDef def = AmmDef::constant_product(3, 8.0, {"X", "Y", "Z"});
    const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
    const Valuation sub(Vec{2.0 / 3.0, 1.0 / 3.0});

    const auto [vinst, spec] = virtualize(inst, {1, 2}, sub, tol);
    CHECK(vinst.def.dim() == 2);
    CHECK(vinst.state.q[0] == 2.0);
    CHECK(vinst.state.q[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(spec.c_units == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(spec.residue_r[0] == 0.0);  // binding coordinate snaps exactly
    CHECK(spec.residue_r[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vinst.def.labels() == std::vector<std::string>{"X", "virtual(Y+Z)"});

    // (A|v)(x, w) = x * (2w/3) * (w/3 + 1) - 8
    Rng rng(66);
    for (int k = 0; k < 20; ++k) {
        const double x = rng.log_uniform(0.5, 8.0);
        const double w = rng.log_uniform(0.5, 8.0);
        const double direct = x * (2.0 * w / 3.0) * (w / 3.0 + 1.0) - 8.0;
        CHECK(std::abs(evaluate(vinst.def, Vec{x, w}, tol) - direct) <= 1e-12);
    }
}

TEST_CASE("virtualized definitions satisfy the axioms") {
    const Tolerances& tol = default_tol();
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
    const auto [vinst, spec] =
        virtualize(inst, {1, 2}, Valuation(Vec{2.0 / 3.0, 1.0 / 3.0}), tol);
    Vec lo{0.25, 0.25}, hi{4.0, 4.0};
    const VerifyReport rep = check_axioms(vinst.def, lo, hi, 500, 7, tol);
    CHECK(rep.unexpected_failures() == 0);
    CHECK(rep.failures() == 0);
}

TEST_CASE("virtualize validates its inputs") {
    const Tolerances& tol = default_tol();
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
    const Valuation half(Vec{0.5, 0.5});
    CHECK_THROWS_AS(virtualize(inst, {1, 1}, half, tol), AmmError);
    CHECK_THROWS_AS(virtualize(inst, {1, 5}, half, tol), AmmError);
    // Merging everything leaves no kept coordinate.
    CHECK_THROWS_AS(
        virtualize(inst, {0, 1, 2}, Valuation(Vec{0.4, 0.3, 0.3}), tol), AmmError);
}

TEST_CASE("devirtualize examples") {
    const Tolerances& tol = default_tol();
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
    const auto [vinst, spec] =
        virtualize(inst, {1, 2}, Valuation(Vec{2.0 / 3.0, 1.0 / 3.0}), tol);

    // The anchor maps back to the original state.
    const StateVector back = devirtualize(vinst.def, vinst.state.q);
    CHECK(back.q[0] == 2.0);
    CHECK(back.q[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(back.q[2] == doctest::Approx(2.0).epsilon(1e-12));

    // z = 6 expands to y = 4, z = 3.
    const StateVector big = devirtualize(vinst.def, Vec{2.0, 6.0});
    CHECK(big.q[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(big.q[2] == doctest::Approx(3.0).epsilon(1e-12));

    CHECK_THROWS_AS(devirtualize(vinst.def, Vec{2.0, -1.0}), AmmError);
    CHECK_THROWS_AS(devirtualize(def, Vec{2.0, 2.0, 2.0}), AmmError);
}

TEST_CASE("devirtualize round trips on-manifold states") {
    Rng rng(77);
    const Tolerances& tol = default_tol();
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
    const auto [vinst, spec] =
        virtualize(inst, {1, 2}, Valuation(Vec{2.0 / 3.0, 1.0 / 3.0}), tol);
    for (int k = 0; k < 50; ++k) {
        const double x = rng.log_uniform(0.3, 10.0);
        const double z = implicit_solve(vinst.def, Vec{x}, 1, 0.0, tol);
        const StateVector full = devirtualize(vinst.def, Vec{x, z});
        // The expanded state is on the underlying manifold.
        CHECK(std::abs(evaluate(def, full.q, tol)) <=
              manifold_residual_bound(def, full.q, tol) + 1e-9);
    }
}

TEST_CASE("solve_along_valuation examples") {
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    const Valuation half(Vec{0.5, 0.5});

    // Already on the manifold: t = 0.
    CHECK(solve_along_valuation(def, Vec{2.0}, Vec{2.0, 2.0}, half) == 0.0);

    // A' = 1 doubles the required product of the tail block:
    // (2 + t/2)^2 = 8  =>  t = 4*sqrt(2) - 4.
    const double t_up = solve_along_valuation(def, Vec{1.0}, Vec{2.0, 2.0}, half);
    CHECK(t_up == doctest::Approx(4.0 * std::sqrt(2.0) - 4.0).epsilon(1e-9));

    // A' = 4 halves it: (2 + t/2)^2 = 2  =>  t = 2*sqrt(2) - 4 < 0.
    const double t_dn = solve_along_valuation(def, Vec{4.0}, Vec{2.0, 2.0}, half);
    CHECK(t_dn == doctest::Approx(2.0 * std::sqrt(2.0) - 4.0).epsilon(1e-9));

    CHECK_THROWS_AS(solve_along_valuation(def, Vec{-1.0}, Vec{2.0, 2.0}, half),
                    AmmError);
    CHECK_THROWS_AS(solve_along_valuation(def, Vec{1.0, 1.0}, Vec{2.0, 2.0}, half),
                    AmmError);
}

TEST_CASE("solve_along_valuation matches the virtual graph") {
    // Moving along v from the residue is exactly the virtual AMM's solve.
    Rng rng(88);
    const Tolerances& tol = default_tol();
    const AmmDef def = AmmDef::constant_product(3, 8.0);
    const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
    const Valuation sub(Vec{2.0 / 3.0, 1.0 / 3.0});
    const auto [vinst, spec] = virtualize(inst, {1, 2}, sub, tol);
    for (int k = 0; k < 25; ++k) {
        const double x = rng.log_uniform(0.5, 8.0);
        const double z = implicit_solve(vinst.def, Vec{x}, 1, 0.0, tol);
        const double t =
            solve_along_valuation(def, Vec{x}, spec.anchor_b, sub, tol);
        // b + t v = r + (c + t) v, so the virtual solution is c + t.
        CHECK(std::abs((spec.c_units + t) - z) <= 1e-7 * std::max(1.0, z));
    }
}
