// Property harness: every axiom and preservation result gets a seeded,
// reproducible check with an explicit oracle. Failures become report rows;
// the two documented counterexamples are recorded as expected failures.
#pragma once

#include <chrono>

#include "ammnet/compose.hpp"
#include "ammnet/core.hpp"
#include "ammnet/operators.hpp"
#include "ammnet/stable.hpp"

namespace ammnet {

struct TheoremCheck {
    std::string id;
    std::string summary;
};

// Every registered result must appear in the theorem suite's report; the
// coverage assertion below fails the build's test run otherwise.
inline const std::vector<TheoremCheck>& theorem_registry() {
    static const std::vector<TheoremCheck> reg = {
        {"closedform-cp-stable", "2-asset constant-product stable point matches its closed form"},
        {"stable-inverse-map", "valuation_of inverts stable_point on the simplex interior"},
        {"stable-minimality", "stable point strictly minimizes v.x over sampled manifold points"},
        {"equivalence-preserves-stable", "cross-AMM map preserves stable points and round-trips"},
        {"project-preserves-stable", "projection keeps the restricted stable point, inherited valuation"},
        {"virtual-is-amm", "virtualized definitions satisfy the AMM axioms"},
        {"virtual-preserves-stable", "virtualization keeps the kept block of the stable point"},
        {"virtual-fixture", "3-asset product fixture: state (2,3), residue (0,1), explicit formula"},
        {"seq-closure", "sequential compositions satisfy the AMM axioms"},
        {"seq-preserves-stable", "constituent stable anchors give the composed stable point"},
        {"seq-converse-fails", "composed stability does not imply constituent stability (counterexample)"},
        {"seq-naive-ambiguous", "many-to-many composition without virtualization is not a function"},
        {"par-anchor-stable", "parallel composition at stable anchors is stable at zero delta"},
        {"par-best-split", "optimal_split equalizes marginal rates and dominates a t-grid"},
        {"fee-leg-identities", "per-trade linear leg: value(0) = (1-gamma)delta, value(delta) = 0"},
        {"fee-path-equality", "direct fee formula equals the explicit leg composition bit-for-bit"},
    };
    return reg;
}

namespace detail {

inline double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double inf_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace detail

// Axiom checks over a roster of definitions plus expressivity and the
// stability round trip. Non-conforming definitions (linear) contribute
// documented expected failures instead of passing rows.
inline VerifyReport run_axiom_suite(const std::vector<AmmDef>& defs, int samples,
                                    uint64_t seed,
                                    const Tolerances& tol = default_tol()) {
    VerifyReport rep;
    rep.suite = "axioms";
    rep.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();

    int expr_case = 0, round_case = 0;
    for (const AmmDef& def : defs) {
        const int n = def.dim();
        Vec lo(n, 0.25), hi(n, 4.0);
        VerifyReport ax = check_axioms(def, lo, hi, samples, seed, tol);
        if (!def.conforming()) {
            // Convexity failures are the documented behavior here.
            for (auto& c : ax.cases)
                if (c.check_id == "convex-strict") c.expected_failure = true;
        }
        rep.merge(ax);

        // Expressivity: every valuation has a stable point; stability:
        // the round trip through valuation_of returns the input.
        Rng rng(seed + 17);
        const int cases = std::max(4, samples / 16);
        for (int k = 0; k < cases; ++k) {
            const Valuation v = rng.valuation(n, tol);
            if (!def.conforming()) {
                bool rejected = false;
                try {
                    stable_point(def, v, {}, tol);
                } catch (const AmmError&) {
                    rejected = true;
                }
                // The solver must reject, and that is the expected failure.
                rep.add("expressivity", expr_case++, rejected ? 1.0 : 0.0, 0.0,
                        !rejected, true);
                continue;
            }
            try {
                const StablePointResult sp = stable_point(def, v, {}, tol);
                rep.add("expressivity", expr_case++, sp.residual_kkt, tol.kkt, true);
                const Valuation back = valuation_of(def, sp.state.q, tol);
                const double d = detail::inf_diff(back.w, v.w);
                rep.add("stability-roundtrip", round_case++, d, 1e-6, d <= 1e-6);
            } catch (const AmmError&) {
                rep.add("expressivity", expr_case++, 1.0, 0.0, false);
            }
        }
    }

    rep.sort();
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

namespace detail {

inline void check_closedform_cp(VerifyReport& rep, uint64_t seed,
                                const Tolerances& tol) {
    Rng rng(seed + 1);
    for (int k = 0; k < 100; ++k) {
        const double c = rng.log_uniform(0.1, 100.0);
        const double v = rng.uniform(0.05, 0.95);
        const AmmDef def = AmmDef::constant_product(2, c);
        const Valuation val(Vec{v, 1.0 - v}, tol);
        // Second coordinate is c over the first, i.e. sqrt(c v/(1-v)).
        const Vec expect{std::sqrt(c * (1.0 - v) / v), std::sqrt(c * v / (1.0 - v))};
        double r = 0;
        bool ok = true;
        try {
            const StablePointResult sp = stable_point(def, val, {}, tol);
            // Force the Newton path as well; both must match the formula.
            // A tighter first-order target keeps the state within 1e-8.
            StableOptions no_cf;
            no_cf.allow_closed_form = false;
            Tolerances tight = tol;
            tight.kkt = std::min(tol.kkt, 1e-11);
            const StablePointResult nw = stable_point(def, val, {}, tight, no_cf);
            for (int i = 0; i < 2; ++i) {
                r = std::max(r, rel_diff(sp.state.q[i], expect[i]));
                r = std::max(r, rel_diff(nw.state.q[i], expect[i]));
            }
            ok = r <= 1e-8;
        } catch (const AmmError&) {
            ok = false;
            r = 1.0;
        }
        rep.add("closedform-cp-stable", k, r, 1e-8, ok);
    }
}

inline void check_inverse_map(VerifyReport& rep, uint64_t seed,
                              const Tolerances& tol) {
    Rng rng(seed + 2);
    for (int k = 0; k < 200; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(4));  // dims 2..5
        const double c = rng.log_uniform(0.1, 100.0);
        AmmDef def = AmmDef::constant_product(n, c);
        if (rng.uniform(0, 1) < 0.5) {
            Vec w(n);
            for (double& wi : w) wi = rng.log_uniform(0.5, 3.0);
            def = AmmDef::constant_mean(std::move(w), c);
        }
        const Valuation v = rng.valuation(n, tol);
        double r = 1.0;
        bool ok = false;
        try {
            const StablePointResult sp = stable_point(def, v, {}, tol);
            const Valuation back = valuation_of(def, sp.state.q, tol);
            r = inf_diff(back.w, v.w);
            ok = r <= 1e-6;
        } catch (const AmmError&) {
        }
        rep.add("stable-inverse-map", k, r, 1e-6, ok);
    }
}

inline void check_minimality(VerifyReport& rep, uint64_t seed,
                             const Tolerances& tol) {
    Rng rng(seed + 3);
    int case_idx = 0;
    for (int k = 0; k < 10; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const double c = rng.log_uniform(0.5, 20.0);
        const AmmDef def = AmmDef::constant_product(n, c);
        const Valuation v = rng.valuation(n, tol);
        const StablePointResult sp = stable_point(def, v, {}, tol);
        const double cost = dot(sp.state.q, v.w);
        for (int j = 0; j < 10; ++j) {
            Vec fixed(n - 1);
            for (double& f : fixed) f = rng.log_uniform(0.2, 5.0);
            Vec y;
            try {
                const double z = implicit_solve(def, fixed, n - 1, 0.0, tol);
                splice(fixed, n - 1, z, y);
            } catch (const AmmError&) {
                continue;
            }
            if (inf_diff(y, sp.state.q) < 1e-6) continue;
            const double other = dot(y, v.w);
            const double slack = 1e-10 * std::abs(cost);
            rep.add("stable-minimality", case_idx++, cost - other, slack,
                    cost < other + slack);
        }
    }
}

inline void check_equivalence(VerifyReport& rep, uint64_t seed,
                              const Tolerances& tol) {
    Rng rng(seed + 4);
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + static_cast<int>(rng.integer(3));
        const AmmDef a = AmmDef::constant_product(n, rng.log_uniform(0.1, 100.0));
        Vec w(n);
        for (double& wi : w) wi = rng.log_uniform(0.5, 3.0);
        const AmmDef b = AmmDef::constant_mean(std::move(w), rng.log_uniform(0.1, 100.0));
        const Valuation v = rng.valuation(n, tol);
        double r = 1.0;
        bool ok = false;
        try {
            const StateVector x = stable_point(a, v, {}, tol).state;
            const StateVector y = equivalence_map(a, b, x.q, tol);
            // The image must be B's stable point for the same valuation,
            // and mapping back must return x.
            const double rv = inf_diff(valuation_of(b, y.q, tol).w, v.w);
            const StateVector back = equivalence_map(b, a, y.q, tol);
            const double rx = inf_diff(back.q, x.q);
            r = std::max(rv, rx);
            ok = rv <= 1e-6 && rx <= 1e-7 * std::max(1.0, norm_inf(x.q));
        } catch (const AmmError&) {
        }
        rep.add("equivalence-preserves-stable", k, r, 1e-6, ok);
    }
}

inline void check_projection(VerifyReport& rep, uint64_t seed,
                             const Tolerances& tol) {
    Rng rng(seed + 5);
    for (int k = 0; k < 100; ++k) {
        const int n = 3 + static_cast<int>(rng.integer(3));  // dims 3..5
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.1, 100.0));
        const Valuation v = rng.valuation(n, tol);
        double r = 1.0;
        bool ok = false;
        try {
            const StateVector x = stable_point(def, v, {}, tol).state;
            // Fix the first coordinate at its stable value.
            const AmmDef proj = project(def, {0}, {x.q[0]});
            std::vector<int> free;
            for (int i = 1; i < n; ++i) free.push_back(i);
            const Valuation vin = inherit_valuation(v, free, tol);
            const StateVector y = stable_point(proj, vin, {}, tol).state;
            r = 0;
            for (int i = 1; i < n; ++i) r = std::max(r, std::abs(y.q[i - 1] - x.q[i]));
            ok = r <= 1e-6 * std::max(1.0, norm_inf(x.q));
        } catch (const AmmError&) {
        }
        rep.add("project-preserves-stable", k, r, 1e-6, ok);
    }
}

inline void check_virtualization(VerifyReport& rep, uint64_t seed, int samples,
                                 const Tolerances& tol) {
    Rng rng(seed + 6);
    // (a) virtualized defs are AMMs.
    for (int k = 0; k < 5; ++k) {
        const int n = 3 + static_cast<int>(rng.integer(2));
        const double c = rng.log_uniform(1.0, 50.0);
        const AmmDef def = AmmDef::constant_product(n, c);
        const AmmInstance inst(def, StateVector(def.anchor()), tol);
        std::vector<int> subset{0, 1};
        const Valuation sub = rng.valuation(2, tol);
        const auto [vinst, spec] = virtualize(inst, subset, sub, tol);
        const int vn = vinst.def.dim();
        Vec lo(vn, 0.25), hi(vn, 4.0);
        const VerifyReport ax =
            check_axioms(vinst.def, lo, hi, std::max(samples / 2, 32), seed + k, tol);
        rep.add("virtual-is-amm", k, static_cast<double>(ax.failures()), 0.0,
                ax.unexpected_failures() == 0);
    }

    // (b) stability of the kept block under virtualization.
    for (int k = 0; k < 50; ++k) {
        const int n = 3 + static_cast<int>(rng.integer(3));
        const AmmDef def = AmmDef::constant_product(n, rng.log_uniform(0.5, 20.0));
        const Valuation v = rng.valuation(n, tol);
        double r = 1.0;
        bool ok = false;
        try {
            const StateVector x = stable_point(def, v, {}, tol).state;
            std::vector<int> subset{n - 2, n - 1};
            const Valuation sub = inherit_valuation(v, subset, tol);
            const AmmInstance inst(def, x, tol);
            const auto [vinst, spec] = virtualize(inst, subset, sub, tol);
            // With the subset valuation normalized, the merged asset's
            // weight is |w|_2^2 / |w|_1 before renormalization.
            const double w1 = v.w[n - 2] + v.w[n - 1];
            const double w2 = v.w[n - 2] * v.w[n - 2] + v.w[n - 1] * v.w[n - 1];
            Vec expect;
            for (int i = 0; i < n - 2; ++i) expect.push_back(v.w[i]);
            expect.push_back(w2 / w1);
            const double s = std::accumulate(expect.begin(), expect.end(), 0.0);
            for (double& e : expect) e /= s;
            const Valuation vv(expect, tol);
            r = inf_diff(valuation_of(vinst.def, vinst.state.q, tol).w, vv.w);
            // Kept block of the virtual stable point equals the original;
            // solve from a perturbed start, not the known answer.
            Vec init = vinst.state.q;
            init[0] *= 1.3;
            const StateVector vs = stable_point(vinst.def, vv, init, tol).state;
            for (int i = 0; i < n - 2; ++i)
                r = std::max(r, std::abs(vs.q[i] - x.q[i]));
            ok = r <= 1e-6 * std::max(1.0, norm_inf(x.q));
        } catch (const AmmError&) {
        }
        rep.add("virtual-preserves-stable", k, r, 1e-6, ok);
    }

    // (c) the fixed 3-asset product fixture.
    {
        const AmmDef def = AmmDef::constant_product(3, 8.0, {"X", "Y", "Z"});
        const AmmInstance inst(def, StateVector({2.0, 2.0, 2.0}), tol);
        const Valuation sub(Vec{2.0 / 3.0, 1.0 / 3.0}, tol);
        const auto [vinst, spec] = virtualize(inst, {1, 2}, sub, tol);
        double r = inf_diff(vinst.state.q, Vec{2.0, 3.0});
        r = std::max(r, inf_diff(spec.residue_r, Vec{0.0, 1.0}));
        rep.add("virtual-fixture", 0, r, 1e-12, r <= 1e-12);
        Rng frng(seed + 7);
        double re = 0;
        for (int k = 0; k < 20; ++k) {
            const double x = frng.log_uniform(0.5, 8.0);
            const double w = frng.log_uniform(0.5, 8.0);
            const double direct = x * (2.0 * w / 3.0) * (w / 3.0 + 1.0) - 8.0;
            re = std::max(re, std::abs(evaluate(vinst.def, Vec{x, w}, tol) - direct));
        }
        rep.add("virtual-fixture", 1, re, 1e-12, re <= 1e-12);
    }
}

inline void check_sequential(VerifyReport& rep, uint64_t seed, int samples,
                             const Tolerances& tol) {
    Rng rng(seed + 8);

    // Closure: the 2-pool fixture and a virtualized many-to-many composition
    // both satisfy the axioms.
    {
        const AmmInstance a(AmmDef::constant_product(2, 1.0), StateVector({1.0, 1.0}),
                            tol);
        const AmmInstance b(AmmDef::constant_product(2, 1.0), StateVector({1.0, 1.0}),
                            tol);
        const AmmInstance comp = seq_compose_2d(a, b, tol);
        Vec lo{0.6, 0.6}, hi{3.0, 3.0};
        const VerifyReport ax =
            check_axioms(comp.def, lo, hi, std::max(samples / 2, 32), seed, tol);
        rep.add("seq-closure", 0, static_cast<double>(ax.failures()), 0.0,
                ax.unexpected_failures() == 0);

        const AmmInstance up(AmmDef::constant_product(3, 1.0),
                             StateVector({1.0, 1.0, 1.0}), tol);
        const AmmInstance dn(AmmDef::constant_product(3, 8.0),
                             StateVector({2.0, 2.0, 2.0}), tol);
        const Valuation w(Vec{0.5, 0.5}, tol);
        const AmmInstance mm = seq_compose_many_to_many(up, {1, 2}, dn, {0, 1}, w, tol);
        Vec mlo(mm.def.dim(), 0.8), mhi(mm.def.dim(), 1.6);
        const VerifyReport ax2 =
            check_axioms(mm.def, mlo, mhi, std::max(samples / 2, 32), seed + 1, tol);
        rep.add("seq-closure", 1, static_cast<double>(ax2.failures()), 0.0,
                ax2.unexpected_failures() == 0);
    }

    // Stable-point preservation: anchor the constituents at their stable
    // points for (v,w) and (w,v'); the composed stable point for (v,v')
    // must be the composed anchor. Solved from a perturbed start so the
    // check exercises the solver rather than the initial guess.
    for (int k = 0; k < 50; ++k) {
        const double v = rng.log_uniform(0.1, 1.0);
        const double w = rng.log_uniform(0.1, 1.0);
        const double vp = rng.log_uniform(0.1, 1.0);
        const double c1 = rng.log_uniform(0.3, 10.0);
        const double c2 = rng.log_uniform(0.3, 10.0);
        double r = 1.0;
        bool ok = false;
        try {
            const AmmDef da = AmmDef::constant_product(2, c1);
            const AmmDef db = AmmDef::constant_product(2, c2);
            const Valuation va(Vec{v / (v + w), w / (v + w)}, tol);
            const Valuation vb(Vec{w / (w + vp), vp / (w + vp)}, tol);
            const AmmInstance a(da, stable_point(da, va, {}, tol).state, tol);
            const AmmInstance b(db, stable_point(db, vb, {}, tol).state, tol);
            const AmmInstance comp = seq_compose_2d(a, b, tol);
            const Valuation vc(Vec{v / (v + vp), vp / (v + vp)}, tol);
            const double x0 = comp.state.q[0] * 1.3;
            Vec init{x0, graph_value(comp.def, Vec{x0}, -1, tol)};
            const StateVector got = stable_point(comp.def, vc, init, tol).state;
            r = inf_diff(got.q, comp.state.q);
            ok = r <= 1e-6 * std::max(1.0, norm_inf(comp.state.q));
        } catch (const AmmError&) {
        }
        rep.add("seq-preserves-stable", k, r, 1e-6, ok);
    }

    // Converse counterexample: two unit pools at (1,1); (1,1) is stable on
    // the composition for (1/4,1/2,1/4) collapsed to (1/2,1/2), but the
    // constituents are not at their stable points.
    {
        const AmmDef unit = AmmDef::constant_product(2, 1.0);
        const AmmInstance a(unit, StateVector({1.0, 1.0}), tol);
        const AmmInstance comp = seq_compose_2d(a, a, tol);
        const Valuation vc(Vec{0.5, 0.5}, tol);
        const double r0 =
            inf_diff(valuation_of(comp.def, comp.state.q, tol).w, vc.w);
        rep.add("seq-converse-fails", 0, r0, 1e-9, r0 <= 1e-9);

        const Valuation va(Vec{1.0 / 3.0, 2.0 / 3.0}, tol);
        const StateVector sa = stable_point(unit, va, {}, tol).state;
        const Vec expect{std::sqrt(2.0), std::sqrt(2.0) / 2.0};
        const double r1 = inf_diff(sa.q, expect);
        rep.add("seq-converse-fails", 1, r1, 1e-9, r1 <= 1e-9);

        // The constituents sit at (1,1), away from their stable points:
        // the converse property fails here by design.
        const double gap = inf_diff(a.state.q, expect);
        rep.add("seq-converse-fails", 2, gap, 0.0, gap <= 0.0, true);
    }

    // Naive many-to-many ambiguity: two valid terminal states.
    {
        const NaiveAmbiguityResult amb = demonstrate_naive_ambiguity();
        const double ra = inf_diff(amb.state_a, Vec{4.0, 8.0 / 25.0});
        const double rb = inf_diff(amb.state_b, Vec{4.0, 1.0 / 3.0});
        rep.add("seq-naive-ambiguous", 0, ra, 1e-12, ra <= 1e-12);
        rep.add("seq-naive-ambiguous", 1, rb, 1e-12, rb <= 1e-12);
        const double gap = std::abs(amb.state_a[1] - amb.state_b[1]);
        // Well-definedness fails: that is the documented counterexample.
        rep.add("seq-naive-ambiguous", 2, gap, 0.0, gap <= 0.0, true);
    }
}

inline void check_parallel(VerifyReport& rep, uint64_t seed,
                           const Tolerances& tol) {
    Rng rng(seed + 9);

    // Stable anchors stay stable at zero delta for every split.
    int case_idx = 0;
    for (int k = 0; k < 10; ++k) {
        const double v = rng.uniform(0.15, 0.85);
        const Valuation val(Vec{v, 1.0 - v}, tol);
        const AmmDef da = AmmDef::constant_product(2, rng.log_uniform(0.3, 10.0));
        const AmmDef db = AmmDef::constant_product(2, rng.log_uniform(0.3, 10.0));
        const AmmInstance a(da, stable_point(da, val, {}, tol).state, tol);
        const AmmInstance b(db, stable_point(db, val, {}, tol).state, tol);
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            double r = 1.0;
            bool ok = false;
            try {
                const AmmInstance comp = par_compose(a, b, Vec{t}, tol);
                r = inf_diff(valuation_of(comp.def, comp.state.q, tol).w, val.w);
                const double d0 = 0.2 * (a.state.q[0] + b.state.q[0]);
                Vec init{d0, graph_value(comp.def, Vec{d0}, -1, tol)};
                const StateVector got = stable_point(comp.def, val, init, tol).state;
                r = std::max(r, inf_diff(got.q, comp.state.q));
                ok = r <= 1e-6 * std::max(1.0, norm_inf(comp.state.q));
            } catch (const AmmError&) {
            }
            rep.add("par-anchor-stable", case_idx++, r, 1e-6, ok);
        }
    }

    // Optimal split: first-order condition at interior optima plus
    // dominance over a dense t-grid.
    auto grid_best = [&](const AmmInstance& a, const AmmInstance& b, double x) {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 1000; ++i) {
            try {
                best = std::max(best, par_return(a, b, i / 1000.0, x, tol));
            } catch (const AmmError&) {
            }
        }
        return best;
    };
    case_idx = 0;
    auto split_case = [&](const AmmInstance& a, const AmmInstance& b, double x) {
        double r = 1.0;
        bool ok = false;
        try {
            const double t = optimal_split(a, b, x, tol);
            const double ret = par_return(a, b, t, x, tol);
            r = grid_best(a, b, x) - ret;
            ok = r <= 1e-9;
            if (t > 0.0 && t < 1.0) {
                const double fd = graph_derivative(a.def, Vec{a.state.q[0] + t * x}, 0,
                                                   -1, tol);
                const double gd = graph_derivative(
                    b.def, Vec{b.state.q[0] + (1.0 - t) * x}, 0, -1, tol);
                r = std::max(r, std::abs(fd - gd));
                ok = ok && std::abs(fd - gd) <= 1e-8;
            }
        } catch (const AmmError&) {
        }
        rep.add("par-best-split", case_idx++, r, 1e-8, ok);
    };

    // The two-trader fixture: x^2 y = 3/4 against xy = 1.
    const AmmInstance bob(AmmDef::constant_mean(Vec{2.0, 1.0}, 0.75),
                          StateVector({1.0, 0.75}), tol);
    const AmmInstance carol(AmmDef::constant_product(2, 1.0), StateVector({1.0, 1.0}),
                            tol);
    split_case(bob, carol, 1.0);
    split_case(bob, carol, 3.0);
    for (int k = 0; k < 10; ++k) {
        const AmmDef da = AmmDef::constant_product(2, rng.log_uniform(0.3, 10.0));
        const AmmDef db = AmmDef::constant_product(2, rng.log_uniform(0.3, 10.0));
        const AmmInstance a(da, StateVector(da.anchor()), tol);
        const AmmInstance b(db, StateVector(db.anchor()), tol);
        split_case(a, b, rng.log_uniform(0.1, 3.0));
    }
}

inline void check_fees(VerifyReport& rep, uint64_t seed, const Tolerances& tol) {
    Rng rng(seed + 10);
    int leg_case = 0, path_case = 0;
    for (int k = 0; k < 100; ++k) {
        const double c = rng.log_uniform(0.3, 30.0);
        const double a = rng.log_uniform(0.2, 10.0);
        const double gamma = rng.uniform(0.0005, 0.05);
        const double delta = rng.log_uniform(0.01, 2.0) * a;
        const AmmDef def = AmmDef::constant_product(2, c);
        const AmmInstance inst(def, StateVector({a, c / a}), tol);
        const LinearFeeLeg leg{a, delta, gamma};
        const bool ids = leg.value(0.0) == (1.0 - gamma) * delta &&
                         leg.value(delta) == 0.0;
        rep.add("fee-leg-identities", leg_case++, ids ? 0.0 : 1.0, 0.0, ids);

        for (FeeSide side : {FeeSide::input, FeeSide::output}) {
            const FeeTradeResult d = fee_trade_direct(inst, gamma, delta, side, tol);
            const FeeTradeResult e = fee_trade_composed(inst, gamma, delta, side, tol);
            const bool same = d.final_state == e.final_state && d.output == e.output;
            const double r = same ? 0.0 : inf_diff(d.final_state, e.final_state);
            rep.add("fee-path-equality", path_case++, r, 0.0, same);
        }
    }
}

}  // namespace detail

// Seeded sweep over every registered preservation result plus the two
// documented counterexamples. `samples` scales the axiom-closure checks.
inline VerifyReport run_theorem_suite(uint64_t seed, int samples = 128,
                                      const Tolerances& tol = default_tol()) {
    VerifyReport rep;
    rep.suite = "theorems";
    rep.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();

    detail::check_closedform_cp(rep, seed, tol);
    detail::check_inverse_map(rep, seed, tol);
    detail::check_minimality(rep, seed, tol);
    detail::check_equivalence(rep, seed, tol);
    detail::check_projection(rep, seed, tol);
    detail::check_virtualization(rep, seed, samples, tol);
    detail::check_sequential(rep, seed, samples, tol);
    detail::check_parallel(rep, seed, tol);
    detail::check_fees(rep, seed, tol);

    rep.sort();
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Throws when a registered result produced no report rows.
inline void assert_theorem_coverage(const VerifyReport& rep) {
    for (const TheoremCheck& t : theorem_registry())
        if (!rep.has_check(t.id))
            throw AmmError("coverage: no cases recorded for check '" + t.id + "'");
}

// The default roster for the axiom suite: conforming families, the linear
// family (documented failures), and a composed fixture.
inline std::vector<AmmDef> builtin_axiom_defs(const Tolerances& tol = default_tol()) {
    std::vector<AmmDef> defs;
    defs.push_back(AmmDef::constant_product(2, 1.0));
    defs.push_back(AmmDef::constant_product(3, 8.0));
    defs.push_back(AmmDef::constant_product(4, 16.0));
    defs.push_back(AmmDef::constant_mean(Vec{2.0, 1.0}, 0.75));
    defs.push_back(AmmDef::linear(Vec{1.0, 1.0}, 3.0));
    const AmmInstance unit(AmmDef::constant_product(2, 1.0), StateVector({1.0, 1.0}),
                           tol);
    defs.push_back(seq_compose_2d(unit, unit, tol).def);
    return defs;
}

// The whole built-in battery: axioms over the default roster plus the
// theorem suite, with the coverage assertion applied.
inline VerifyReport run_builtin_verify(uint64_t seed, int samples = 128,
                                       const Tolerances& tol = default_tol()) {
    VerifyReport rep = run_axiom_suite(builtin_axiom_defs(tol), samples, seed, tol);
    const VerifyReport thm = run_theorem_suite(seed, samples, tol);
    assert_theorem_coverage(thm);
    rep.merge(thm);
    rep.suite = "builtin";
    rep.elapsed_seconds += thm.elapsed_seconds;
    rep.sort();
    return rep;
}

}  // namespace ammnet
