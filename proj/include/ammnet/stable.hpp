// Valuation <-> state duality: the stable-point solver, its inverse map,
// the cross-AMM equivalence map and a grid oracle.
#pragma once

#include "ammnet/core.hpp"

namespace ammnet {

struct StablePointResult {
    StateVector state;
    double lagrange_lambda = 0.0;
    double residual_kkt = 0.0;
    double residual_manifold = 0.0;
    int iterations = 0;
};

struct StableOptions {
    bool allow_closed_form = true;
    // Scale used by the fallback symmetric initialization when the family
    // provides no anchor.
    double init_scale = 1.0;
};

namespace detail {

// Gaussian elimination with partial pivoting; m is row-major n x n.
inline bool solve_dense(std::vector<double>& m, std::vector<double>& rhs, int n) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
        if (std::abs(m[piv * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(m[col * n + c], m[piv * n + c]);
            std::swap(rhs[col], rhs[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = m[r * n + col] / m[col * n + col];
            if (f == 0) continue;
            for (int c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = rhs[r];
        for (int c = r + 1; c < n; ++c) s -= m[r * n + c] * rhs[c];
        rhs[r] = s / m[r * n + r];
    }
    return true;
}

// Hessian of A by central differences of the gradient.
inline void fd_hessian(const AmmDef& def, std::span<const double> x,
                       std::vector<double>& h, const Tolerances& tol) {
    const int n = def.dim();
    h.assign(n * n, 0.0);
    Vec xp(x.begin(), x.end()), gp(n), gm(n);
    for (int i = 0; i < n; ++i) {
        const double step = std::max(tol.fd_step_rel * std::abs(x[i]), tol.fd_step_abs);
        const double xi = xp[i];
        xp[i] = xi + step;
        def.family_impl().gradient(xp, gp, tol);
        xp[i] = xi - step;
        def.family_impl().gradient(xp, gm, tol);
        xp[i] = xi;
        for (int j = 0; j < n; ++j) h[i * n + j] = (gp[j] - gm[j]) / (2 * step);
    }
    // Symmetrize.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (h[i * n + j] + h[j * n + i]);
            h[i * n + j] = h[j * n + i] = v;
        }
}

inline bool closed_form_stable(const AmmDef& def, const Valuation& v, Vec& out) {
    if (auto* cp = dynamic_cast<const ConstantProductFamily*>(&def.family_impl())) {
        // minimize v.x on prod(x) = c: x_i = (c prod(v))^(1/n) / v_i
        const int n = def.dim();
        double pv = 1;
        for (double vi : v.w) pv *= vi;
        const double k = std::pow(cp->level() * pv, 1.0 / n);
        out.resize(n);
        for (int i = 0; i < n; ++i) out[i] = k / v.w[i];
        return true;
    }
    if (auto* cm = dynamic_cast<const ConstantMeanFamily*>(&def.family_impl())) {
        // x_i = k w_i / v_i with k fixed by the level constraint.
        const Vec& w = cm->weights();
        const int n = def.dim();
        double s = 0, logp = 0;
        for (int i = 0; i < n; ++i) {
            s += w[i];
            logp += w[i] * std::log(w[i] / v.w[i]);
        }
        const double logk = (std::log(cm->level()) - logp) / s;
        const double k = std::exp(logk);
        out.resize(n);
        for (int i = 0; i < n; ++i) out[i] = k * w[i] / v.w[i];
        return true;
    }
    return false;
}

}  // namespace detail

// Solves min v.x subject to A(x) = 0. Closed form for the constant-product
// and constant-mean families, otherwise damped Newton on the square system
// (lambda grad A - v, A) in (x, lambda) with positivity-preserving step
// halving.
inline StablePointResult stable_point(const AmmDef& def, const Valuation& v,
                                      const Vec& init = {},
                                      const Tolerances& tol = default_tol(),
                                      const StableOptions& opts = {}) {
    if (!def.conforming())
        throw AmmError("stable_point: definition does not satisfy the AMM axioms");
    if (v.dim() != def.dim()) throw AmmError("stable_point: valuation dimension mismatch");

    const int n = def.dim();
    StablePointResult res;

    Vec x;
    if (opts.allow_closed_form && init.empty() &&
        detail::closed_form_stable(def, v, x)) {
        Vec g = gradient(def, x, tol);
        const double g1 = norm1(g);
        if (g1 < 1e-14) throw AmmError("stable_point: degenerate gradient");
        res.lagrange_lambda = 1.0 / g1;
        Vec kkt(n);
        for (int i = 0; i < n; ++i) kkt[i] = res.lagrange_lambda * g[i] - v.w[i];
        res.residual_kkt = norm_inf(kkt);
        res.residual_manifold = std::abs(def.family_impl().evaluate(x));
        res.state = StateVector(std::move(x));
        return res;
    }

    if (!init.empty()) {
        if (static_cast<int>(init.size()) != n)
            throw AmmError("stable_point: init dimension mismatch");
        x = init;
    } else {
        x = def.anchor();
        if (x.empty()) {
            // Symmetric on-manifold point: root of the increasing map
            // s -> A(s * 1), found by geometric bracketing plus bisection.
            Vec pt(n);
            auto eval_sym = [&](double s) {
                std::fill(pt.begin(), pt.end(), s);
                return def.family_impl().evaluate(pt);
            };
            double lo = opts.init_scale, hi = opts.init_scale;
            if (eval_sym(lo) > 0) {
                while (eval_sym(lo) > 0) {
                    lo /= 2;
                    if (lo < opts.init_scale / tol.bracket_span)
                        throw AmmError("stable_point: no symmetric on-manifold point");
                }
            } else {
                while (eval_sym(hi) < 0) {
                    hi *= 2;
                    if (hi > opts.init_scale * tol.bracket_span)
                        throw AmmError("stable_point: no symmetric on-manifold point");
                }
            }
            for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (eval_sym(mid) > 0 ? hi : lo) = mid;
            }
            x.assign(n, 0.5 * (lo + hi));
        }
    }

    double lambda;
    {
        Vec g(n);
        def.family_impl().gradient(x, g, tol);
        const double g1 = norm1(g);
        if (g1 < 1e-14) throw AmmError("stable_point: degenerate gradient");
        lambda = 1.0 / g1;
    }

    Vec g(n), hess, jac((n + 1) * (n + 1)), rhs(n + 1), xtrial(n);
    auto residual = [&](const Vec& xx, double lam, Vec& grad_out) {
        def.family_impl().gradient(xx, grad_out, tol);
        double r = std::abs(def.family_impl().evaluate(xx));
        for (int i = 0; i < n; ++i)
            r = std::max(r, std::abs(lam * grad_out[i] - v.w[i]));
        return r;
    };

    double best = residual(x, lambda, g);
    for (int it = 0; it < tol.max_newton_iters; ++it) {
        def.family_impl().gradient(x, g, tol);
        const double fval = def.family_impl().evaluate(x);
        res.iterations = it;

        double kkt_inf = 0;
        for (int i = 0; i < n; ++i)
            kkt_inf = std::max(kkt_inf, std::abs(lambda * g[i] - v.w[i]));
        const double mbound = tol.manifold_rel * (1.0 + norm2(g));
        if (kkt_inf <= tol.kkt && std::abs(fval) <= mbound) {
            res.lagrange_lambda = lambda;
            res.residual_kkt = kkt_inf;
            res.residual_manifold = std::abs(fval);
            res.state = StateVector(x);
            return res;
        }

        detail::fd_hessian(def, x, hess, tol);
        // J = [lambda H, g; g^T, 0], F = [lambda g - v; A]
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) jac[i * (n + 1) + j] = lambda * hess[i * n + j];
            jac[i * (n + 1) + n] = g[i];
            rhs[i] = -(lambda * g[i] - v.w[i]);
        }
        for (int j = 0; j < n; ++j) jac[n * (n + 1) + j] = g[j];
        jac[n * (n + 1) + n] = 0;
        rhs[n] = -fval;
        std::vector<double> m = jac, d = rhs;
        if (!detail::solve_dense(m, d, n + 1))
            throw AmmError("stable_point: singular Newton system");

        // Step halving: keep the domain and demand residual descent.
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < tol.max_halvings; ++h, step *= 0.5) {
            bool domain_ok = true;
            for (int i = 0; i < n; ++i) {
                xtrial[i] = x[i] + step * d[i];
                const double floor = def.family_impl().domain_floor(i);
                const double lo = floor == 0.0 ? tol.positivity_floor : floor;
                if (!(xtrial[i] > lo)) { domain_ok = false; break; }
            }
            if (!domain_ok) continue;
            const double ltrial = lambda + step * d[n];
            if (!(ltrial > 0)) continue;
            double rtrial;
            try {
                rtrial = residual(xtrial, ltrial, g);
            } catch (const AmmError&) {
                continue;
            }
            if (rtrial < best) {
                x = xtrial;
                lambda = ltrial;
                best = rtrial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    // A last accepted step may have reached convergence after the top-of-loop
    // check; test once more before giving up.
    {
        def.family_impl().gradient(x, g, tol);
        const double fval = def.family_impl().evaluate(x);
        double kkt_inf = 0;
        for (int i = 0; i < n; ++i)
            kkt_inf = std::max(kkt_inf, std::abs(lambda * g[i] - v.w[i]));
        if (kkt_inf <= tol.kkt &&
            std::abs(fval) <= tol.manifold_rel * (1.0 + norm2(g))) {
            res.lagrange_lambda = lambda;
            res.residual_kkt = kkt_inf;
            res.residual_manifold = std::abs(fval);
            res.state = StateVector(std::move(x));
            return res;
        }
    }

    std::ostringstream os;
    os << "stable_point: no convergence after " << res.iterations
       << " iterations (best residual " << best << ")";
    throw AmmError(os.str());
}

// The inverse of the stable-point map: grad A(x) / |grad A(x)|_1 is the
// unique valuation whose stable point is x.
inline Valuation valuation_of(const AmmDef& def, std::span<const double> x,
                              const Tolerances& tol = default_tol()) {
    if (!def.conforming())
        throw AmmError("valuation_of: definition does not satisfy the AMM axioms");
    const double a = evaluate(def, x, tol);
    if (std::abs(a) > manifold_residual_bound(def, x, tol))
        throw AmmError("valuation_of: state is off-manifold");
    Vec g = gradient(def, x, tol);
    const double g1 = norm1(g);
    if (g1 < 1e-14) throw AmmError("valuation_of: degenerate gradient");
    for (double& gi : g) gi /= g1;
    return Valuation(std::move(g), tol);
}

// Stable-point preserving map between two AMMs over the same assets.
inline StateVector equivalence_map(const AmmDef& def_a, const AmmDef& def_b,
                                   std::span<const double> x,
                                   const Tolerances& tol = default_tol()) {
    if (def_a.dim() != def_b.dim())
        throw AmmError("equivalence_map: dimension mismatch");
    const Valuation v = valuation_of(def_a, x, tol);
    return stable_point(def_b, v, {}, tol).state;
}

// Grid-scan oracle for min v.x over the manifold; log-spaced because the
// constant-product manifolds are hyperbolic. Test-scale only (dim <= 4).
inline StateVector brute_force_stable(const AmmDef& def, const Valuation& v,
                                      int grid, double box_lo, double box_hi,
                                      const Tolerances& tol = default_tol()) {
    const int n = def.dim();
    if (n > 4) throw AmmError("brute_force_stable: oracle limited to dim <= 4");
    if (!(box_lo > 0 && box_hi > box_lo))
        throw AmmError("brute_force_stable: box must lie in the positive orthant");

    const int m = n - 1;
    Vec fixed(m), best_state;
    double best = std::numeric_limits<double>::infinity();
    const double llo = std::log(box_lo), lhi = std::log(box_hi);
    std::vector<int> idx(m, 0);
    Vec full;
    while (true) {
        for (int i = 0; i < m; ++i)
            fixed[i] = std::exp(llo + (lhi - llo) * idx[i] / (grid - 1));
        try {
            const double z = implicit_solve(def, fixed, n - 1, 0.0, tol);
            detail::splice(fixed, n - 1, z, full);
            const double cost = dot(full, v.w);
            if (cost < best) {
                best = cost;
                best_state = full;
            }
        } catch (const AmmError&) {
            // infeasible grid point, skip
        }
        int k = 0;
        while (k < m && ++idx[k] == grid) idx[k++] = 0;
        if (k == m) break;
    }
    if (best_state.empty()) throw AmmError("brute_force_stable: no feasible grid point");
    return StateVector(std::move(best_state));
}

}  // namespace ammnet
