// Core AMM machinery: function families, state/valuation types, implicit
// solves and trade execution.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ammnet/report.hpp"

namespace ammnet {

using Vec = std::vector<double>;

struct AmmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trade or solve would leave the positive orthant / deplete an asset.
struct InfeasibleError : AmmError {
    using AmmError::AmmError;
};

struct Tolerances {
    double positivity_floor = 1e-12;
    double manifold_rel = 1e-9;      // |A(x)| <= manifold_rel * (1 + |grad|_2)
    double root_rel = 1e-10;         // implicit_solve residual scale
    double kkt = 1e-8;               // stable-point first-order residual
    double fd_step_rel = 1e-6;
    double fd_step_abs = 1e-9;
    double valuation_sum_abs = 1e-12;
    double valuation_edge = 1e-9;    // reject weights within this of 0 or 1
    double bracket_span = 1e18;      // implicit_solve expansion limit
    int max_newton_iters = 200;
    int max_halvings = 60;
};

inline const Tolerances& default_tol() {
    static const Tolerances t{};
    return t;
}

inline double norm1(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double norm2(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) {
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace detail {

class Family;

// Central finite differences, step relative to coordinate magnitude.
inline void fd_gradient(const std::function<double(std::span<const double>)>& f,
                        std::span<const double> x, std::span<double> g,
                        const Tolerances& tol) {
    Vec xp(x.begin(), x.end());
    for (size_t i = 0; i < x.size(); ++i) {
        const double h = std::max(tol.fd_step_rel * std::abs(x[i]), tol.fd_step_abs);
        const double xi = xp[i];
        xp[i] = xi + h;
        const double fp = f(xp);
        xp[i] = xi - h;
        const double fm = f(xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2 * h);
    }
}

class Family {
public:
    virtual ~Family() = default;
    virtual int dim() const = 0;
    virtual double evaluate(std::span<const double> x) const = 0;
    virtual bool analytic_gradient() const { return false; }
    virtual void gradient(std::span<const double> x, std::span<double> g,
                          const Tolerances& tol) const {
        fd_gradient([this](std::span<const double> p) { return evaluate(p); }, x, g, tol);
    }
    virtual bool conforming() const { return true; }
    // Lower bound of the valid domain per coordinate. Delta-coordinate
    // families (parallel composition) override with negative bounds.
    virtual double domain_floor(int) const { return 0.0; }
    // Closed-form value of coordinate free_idx given the remaining ones,
    // where the family has one; callers fall back to implicit_solve.
    virtual bool closed_graph(std::span<const double>, int, const Tolerances&,
                              double&) const {
        return false;
    }
    virtual std::string name() const = 0;
    // Reference on-manifold point, used to seed solvers. Empty if unknown.
    virtual Vec anchor() const { return {}; }
};

}  // namespace detail

// An AMM function family. Value type; cheap to copy (shared immutable impl).
class AmmDef {
public:
    explicit AmmDef(std::shared_ptr<const detail::Family> impl,
                    std::vector<std::string> labels = {})
        : impl_(std::move(impl)), labels_(std::move(labels)) {
        if (!impl_) throw AmmError("null AMM definition");
        if (impl_->dim() < 2) throw AmmError("AMM dimension must be >= 2");
        if (!labels_.empty() && static_cast<int>(labels_.size()) != impl_->dim())
            throw AmmError("label count does not match dimension");
    }

    int dim() const { return impl_->dim(); }
    bool conforming() const { return impl_->conforming(); }
    bool analytic_gradient() const { return impl_->analytic_gradient(); }
    std::string family() const { return impl_->name(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const detail::Family& family_impl() const { return *impl_; }
    std::shared_ptr<const detail::Family> impl() const { return impl_; }

    AmmDef with_labels(std::vector<std::string> labels) const {
        return AmmDef(impl_, std::move(labels));
    }

    void validate_state(std::span<const double> x,
                        const Tolerances& tol = default_tol()) const {
        if (static_cast<int>(x.size()) != dim()) {
            std::ostringstream os;
            os << "dimension mismatch: state has " << x.size() << " coordinates, AMM has "
               << dim();
            throw AmmError(os.str());
        }
        for (size_t i = 0; i < x.size(); ++i) {
            const double floor = impl_->domain_floor(static_cast<int>(i));
            const double lo = floor == 0.0 ? tol.positivity_floor : floor;
            if (!(x[i] > lo)) {
                std::ostringstream os;
                os << "coordinate " << i << " = " << x[i] << " at or below domain floor "
                   << lo;
                throw AmmError(os.str());
            }
        }
    }

    Vec anchor() const { return impl_->anchor(); }

    // Factories for the closed-form families.
    static AmmDef constant_product(int dim, double level,
                                   std::vector<std::string> labels = {});
    static AmmDef constant_mean(Vec weights, double level,
                                std::vector<std::string> labels = {});
    static AmmDef linear(Vec rates, double level, std::vector<std::string> labels = {});
    static AmmDef explicit_graph(int dim,
                                 std::function<double(std::span<const double>)> h,
                                 bool conforming,
                                 std::vector<std::string> labels = {},
                                 Vec anchor = {}, Vec floors = {});

private:
    std::shared_ptr<const detail::Family> impl_;
    std::vector<std::string> labels_;
};

// A(x) for def's family; throws on dimension mismatch or out-of-domain x.
inline double evaluate(const AmmDef& def, std::span<const double> x,
                       const Tolerances& tol = default_tol()) {
    def.validate_state(x, tol);
    return def.family_impl().evaluate(x);
}

// Gradient of A at x; analytic where the family has one, else central
// differences. Every component must come out strictly positive.
inline Vec gradient(const AmmDef& def, std::span<const double> x,
                    const Tolerances& tol = default_tol()) {
    def.validate_state(x, tol);
    Vec g(x.size());
    def.family_impl().gradient(x, g, tol);
    for (size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0)) {
            std::ostringstream os;
            os << "non-positive gradient component " << i << " = " << g[i]
               << " (non-conforming definition?)";
            throw AmmError(os.str());
        }
    }
    return g;
}

inline double manifold_residual_bound(const AmmDef& def, std::span<const double> x,
                                      const Tolerances& tol = default_tol()) {
    Vec g(x.size());
    def.family_impl().gradient(x, g, tol);
    return tol.manifold_rel * (1.0 + norm2(g));
}

// Strictly positive asset quantities. Dimension checked against a def at
// instance construction; here we only require dim >= 2.
struct StateVector {
    Vec q;

    StateVector() = default;
    explicit StateVector(Vec quantities) : q(std::move(quantities)) {
        if (q.size() < 2) throw AmmError("state needs at least 2 coordinates");
    }
    int dim() const { return static_cast<int>(q.size()); }
    double operator[](size_t i) const { return q[i]; }
};

// Interior-of-simplex relative price vector.
struct Valuation {
    Vec w;

    Valuation() = default;
    explicit Valuation(Vec weights, const Tolerances& tol = default_tol())
        : w(std::move(weights)) {
        if (w.size() < 2) throw AmmError("valuation needs at least 2 weights");
        double sum = 0;
        for (double v : w) {
            if (!(v > tol.valuation_edge) || !(v < 1.0 - tol.valuation_edge))
                throw AmmError("valuation weight outside the open interval (0,1)");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol.valuation_sum_abs)
            throw AmmError("valuation weights must sum to 1");
    }
    int dim() const { return static_cast<int>(w.size()); }
    double operator[](size_t i) const { return w[i]; }
};

// old state minus new state, component-wise.
struct ProfitLoss {
    Vec deltas;
};

struct AmmInstance {
    AmmDef def;
    StateVector state;

    AmmInstance(AmmDef d, StateVector s, const Tolerances& tol = default_tol())
        : def(std::move(d)), state(std::move(s)) {
        const double a = evaluate(def, state.q, tol);
        if (std::abs(a) > manifold_residual_bound(def, state.q, tol)) {
            std::ostringstream os;
            os << "state is off-manifold: |A(state)| = " << std::abs(a);
            throw AmmError(os.str());
        }
    }
};

namespace detail {

inline void splice(std::span<const double> fixed, int free_idx, double z, Vec& out) {
    out.resize(fixed.size() + 1);
    size_t j = 0;
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = (static_cast<int>(i) == free_idx) ? z : fixed[j++];
}

class ConstantProductFamily final : public Family {
public:
    ConstantProductFamily(int dim, double level) : dim_(dim), level_(level) {
        if (dim < 2) throw AmmError("constant-product needs dim >= 2");
        if (!(level > 0)) throw AmmError("constant-product level must be positive");
    }
    int dim() const override { return dim_; }
    double evaluate(std::span<const double> x) const override {
        double p = 1;
        for (double xi : x) p *= xi;
        return p - level_;
    }
    bool analytic_gradient() const override { return true; }
    void gradient(std::span<const double> x, std::span<double> g,
                  const Tolerances&) const override {
        double p = 1;
        for (double xi : x) p *= xi;
        for (size_t i = 0; i < x.size(); ++i) g[i] = p / x[i];
    }
    bool closed_graph(std::span<const double> head, int, const Tolerances&,
                      double& out) const override {
        double p = 1;
        for (double x : head) p *= x;
        out = level_ / p;
        return true;
    }
    std::string name() const override { return "constant-product"; }
    Vec anchor() const override {
        return Vec(dim_, std::pow(level_, 1.0 / dim_));
    }
    double level() const { return level_; }

private:
    int dim_;
    double level_;
};

class ConstantMeanFamily final : public Family {
public:
    ConstantMeanFamily(Vec weights, double level)
        : w_(std::move(weights)), level_(level) {
        if (w_.size() < 2) throw AmmError("constant-mean needs dim >= 2");
        for (double wi : w_)
            if (!(wi > 0)) throw AmmError("constant-mean weights must be positive");
        if (!(level > 0)) throw AmmError("constant-mean level must be positive");
    }
    int dim() const override { return static_cast<int>(w_.size()); }
    double evaluate(std::span<const double> x) const override {
        double p = 1;
        for (size_t i = 0; i < x.size(); ++i) p *= std::pow(x[i], w_[i]);
        return p - level_;
    }
    bool analytic_gradient() const override { return true; }
    void gradient(std::span<const double> x, std::span<double> g,
                  const Tolerances&) const override {
        double p = 1;
        for (size_t i = 0; i < x.size(); ++i) p *= std::pow(x[i], w_[i]);
        for (size_t i = 0; i < x.size(); ++i) g[i] = w_[i] * p / x[i];
    }
    bool closed_graph(std::span<const double> head, int free_idx, const Tolerances&,
                      double& out) const override {
        double logp = 0;
        size_t j = 0;
        for (int i = 0; i < dim(); ++i) {
            if (i == free_idx) continue;
            const double x = head[j++];
            if (!(x > 0)) throw InfeasibleError("constant-mean: non-positive coordinate");
            logp += w_[i] * std::log(x);
        }
        out = std::exp((std::log(level_) - logp) / w_[free_idx]);
        return true;
    }
    std::string name() const override { return "constant-mean"; }
    Vec anchor() const override {
        const double s = std::accumulate(w_.begin(), w_.end(), 0.0);
        return Vec(w_.size(), std::pow(level_, 1.0 / s));
    }
    const Vec& weights() const { return w_; }
    double level() const { return level_; }

private:
    Vec w_;
    double level_;
};

class LinearFamily final : public Family {
public:
    LinearFamily(Vec rates, double level) : rates_(std::move(rates)), level_(level) {
        if (rates_.size() < 2) throw AmmError("linear needs dim >= 2");
        for (double r : rates_)
            if (!(r > 0)) throw AmmError("linear rates must be positive");
        if (!(level > 0)) throw AmmError("linear level must be positive");
    }
    int dim() const override { return static_cast<int>(rates_.size()); }
    double evaluate(std::span<const double> x) const override {
        double s = -level_;
        for (size_t i = 0; i < x.size(); ++i) s += rates_[i] * x[i];
        return s;
    }
    bool analytic_gradient() const override { return true; }
    void gradient(std::span<const double>, std::span<double> g,
                  const Tolerances&) const override {
        std::copy(rates_.begin(), rates_.end(), g.begin());
    }
    bool conforming() const override { return false; }  // not strictly convex
    std::string name() const override { return "linear"; }
    Vec anchor() const override {
        const double s = std::accumulate(rates_.begin(), rates_.end(), 0.0);
        return Vec(rates_.size(), level_ / s);
    }

private:
    Vec rates_;
    double level_;
};

// A(x, y) = y - h(x) for a user-supplied base function h.
class ExplicitGraphFamily final : public Family {
public:
    ExplicitGraphFamily(int dim, std::function<double(std::span<const double>)> h,
                        bool conforming, Vec anchor, Vec floors = {})
        : dim_(dim), h_(std::move(h)), conforming_(conforming),
          anchor_(std::move(anchor)), floors_(std::move(floors)) {
        if (dim < 2) throw AmmError("explicit-graph needs dim >= 2");
        if (!h_) throw AmmError("explicit-graph needs a base function");
        if (!floors_.empty() && static_cast<int>(floors_.size()) != dim)
            throw AmmError("explicit-graph floors dimension mismatch");
    }
    int dim() const override { return dim_; }
    double evaluate(std::span<const double> x) const override {
        return x[dim_ - 1] - h_(x.subspan(0, dim_ - 1));
    }
    bool conforming() const override { return conforming_; }
    double domain_floor(int i) const override {
        return floors_.empty() ? 0.0 : floors_[i];
    }
    bool closed_graph(std::span<const double> head, int free_idx, const Tolerances&,
                      double& out) const override {
        if (free_idx != dim_ - 1) return false;
        out = h_(head);
        return true;
    }
    std::string name() const override { return "explicit-graph"; }
    Vec anchor() const override { return anchor_; }
    const std::function<double(std::span<const double>)>& base_fn() const { return h_; }

private:
    int dim_;
    std::function<double(std::span<const double>)> h_;
    bool conforming_;
    Vec anchor_;
    Vec floors_;
};

}  // namespace detail

inline AmmDef AmmDef::constant_product(int dim, double level,
                                       std::vector<std::string> labels) {
    return AmmDef(std::make_shared<detail::ConstantProductFamily>(dim, level),
                  std::move(labels));
}

inline AmmDef AmmDef::constant_mean(Vec weights, double level,
                                    std::vector<std::string> labels) {
    return AmmDef(std::make_shared<detail::ConstantMeanFamily>(std::move(weights), level),
                  std::move(labels));
}

inline AmmDef AmmDef::linear(Vec rates, double level, std::vector<std::string> labels) {
    return AmmDef(std::make_shared<detail::LinearFamily>(std::move(rates), level),
                  std::move(labels));
}

inline AmmDef AmmDef::explicit_graph(int dim,
                                     std::function<double(std::span<const double>)> h,
                                     bool conforming, std::vector<std::string> labels,
                                     Vec anchor, Vec floors) {
    return AmmDef(std::make_shared<detail::ExplicitGraphFamily>(
                      dim, std::move(h), conforming, std::move(anchor),
                      std::move(floors)),
                  std::move(labels));
}

// Solves A(fixed, z) = 0 for the single free coordinate. A is strictly
// increasing in z so a sign-changing bracket pins the unique root; the
// bracket is found by geometric expansion from the anchor scale, then
// tightened by Newton with bisection fallback.
inline double implicit_solve(const AmmDef& def, std::span<const double> fixed,
                             int free_idx, double anchor_hint = 0.0,
                             const Tolerances& tol = default_tol()) {
    if (static_cast<int>(fixed.size()) != def.dim() - 1)
        throw AmmError("implicit_solve: fixed coordinates must cover all but one axis");
    if (free_idx < 0 || free_idx >= def.dim())
        throw AmmError("implicit_solve: free coordinate index out of range");
    for (double v : fixed)
        if (!(v > 0) && def.family_impl().domain_floor(0) == 0.0)
            throw AmmError("implicit_solve: fixed coordinates must be positive");

    Vec buf;
    auto eval = [&](double z) {
        detail::splice(fixed, free_idx, z, buf);
        return def.family_impl().evaluate(buf);
    };

    double scale = anchor_hint;
    if (!(scale > 0)) {
        const Vec a = def.anchor();
        scale = (!a.empty()) ? a[free_idx] : 1.0;
        if (!(scale > 0)) scale = 1.0;
    }

    // A increasing in z: positive values bound from above, negative below.
    double lo = 0, hi = 0;
    double z = scale;
    double fz = eval(z);
    if (fz == 0) return z;
    if (fz > 0) {
        hi = z;
        while (true) {
            z /= 2;
            if (z < scale / tol.bracket_span)
                throw InfeasibleError("implicit_solve: no positive root (asset exhausted)");
            fz = eval(z);
            if (fz <= 0) { lo = z; break; }
            hi = z;
        }
    } else {
        lo = z;
        while (true) {
            z *= 2;
            if (z > scale * tol.bracket_span)
                throw InfeasibleError("implicit_solve: no root within domain expansion limit");
            fz = eval(z);
            if (fz >= 0) { hi = z; break; }
            lo = z;
        }
    }

    // Safeguarded Newton inside [lo, hi].
    z = 0.5 * (lo + hi);
    Vec g(def.dim());
    for (int it = 0; it < tol.max_newton_iters; ++it) {
        detail::splice(fixed, free_idx, z, buf);
        const double f = def.family_impl().evaluate(buf);
        def.family_impl().gradient(buf, g, tol);
        const double bound = tol.root_rel * (1.0 + norm2(g));
        if (std::abs(f) <= bound) return z;
        if (f > 0) hi = z; else lo = z;
        const double dfdz = g[free_idx];
        double znew = (dfdz > 0) ? z - f / dfdz : z;
        if (!(znew > lo) || !(znew < hi)) znew = 0.5 * (lo + hi);
        if (znew == z) return z;  // interval exhausted at double precision
        z = znew;
    }
    detail::splice(fixed, free_idx, z, buf);
    if (std::abs(def.family_impl().evaluate(buf)) <=
        tol.root_rel * 1e3 * (1.0 + norm2(g)))
        return z;
    throw AmmError("implicit_solve: did not converge");
}

// Applies signed deltas to all but the free coordinate, re-solves the free
// one, and reports the trader's profit-loss (old minus new).
inline std::pair<AmmInstance, ProfitLoss> trade(const AmmInstance& inst,
                                                std::span<const double> deltas,
                                                int free_idx,
                                                const Tolerances& tol = default_tol()) {
    const int n = inst.def.dim();
    if (static_cast<int>(deltas.size()) != n - 1)
        throw AmmError("trade: need one delta per non-free coordinate");
    if (free_idx < 0 || free_idx >= n) throw AmmError("trade: bad free coordinate");

    Vec fixed(n - 1);
    size_t j = 0;
    for (int i = 0; i < n; ++i) {
        if (i == free_idx) continue;
        const double v = inst.state.q[i] + deltas[j];
        const double floor = inst.def.family_impl().domain_floor(i);
        if (!(v > (floor == 0.0 ? tol.positivity_floor : floor)))
            throw InfeasibleError("trade: delta exhausts a fixed coordinate");
        fixed[j++] = v;
    }
    const double z =
        implicit_solve(inst.def, fixed, free_idx, inst.state.q[free_idx], tol);

    Vec next;
    detail::splice(fixed, free_idx, z, next);
    ProfitLoss pl;
    pl.deltas.resize(n);
    for (int i = 0; i < n; ++i) pl.deltas[i] = inst.state.q[i] - next[i];
    return {AmmInstance(inst.def, StateVector(next), tol), std::move(pl)};
}

// Deterministic draw helpers for the sampled checks.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }
    uint64_t integer(uint64_t n) {
        return std::uniform_int_distribution<uint64_t>(0, n - 1)(eng_);
    }
    // Normalized log-uniform draws clamped away from the simplex boundary.
    Valuation valuation(int dim, const Tolerances& tol = default_tol()) {
        Vec w(dim);
        double s = 0;
        for (double& wi : w) { wi = log_uniform(1e-2, 1.0); s += wi; }
        for (double& wi : w) wi = std::clamp(wi / s, 1e-3, 1.0 - 1e-3);
        s = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& wi : w) wi /= s;
        return Valuation(std::move(w), tol);
    }

private:
    std::mt19937_64 eng_;
};

// Samples the box for monotonicity, upper-contour strict convexity and
// gradient positivity. Failures are report rows, never exceptions.
inline VerifyReport check_axioms(const AmmDef& def, std::span<const double> box_lo,
                                 std::span<const double> box_hi, int samples,
                                 uint64_t seed,
                                 const Tolerances& tol = default_tol()) {
    const int n = def.dim();
    if (static_cast<int>(box_lo.size()) != n || static_cast<int>(box_hi.size()) != n)
        throw AmmError("check_axioms: box dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (!(box_lo[i] > 0 && box_hi[i] > box_lo[i]) &&
            def.family_impl().domain_floor(i) == 0.0)
            throw AmmError("check_axioms: box must lie in the positive orthant");

    VerifyReport rep;
    rep.suite = "axioms:" + def.family();
    rep.seed = seed;
    Rng rng(seed);

    auto sample_point = [&](Vec& x) {
        x.resize(n);
        for (int i = 0; i < n; ++i) {
            if (box_lo[i] > 0)
                x[i] = rng.log_uniform(box_lo[i], box_hi[i]);
            else
                x[i] = rng.uniform(box_lo[i], box_hi[i]);
        }
    };
    // Projects a sample onto the manifold through the last coordinate.
    auto manifold_point = [&](Vec& x) -> bool {
        sample_point(x);
        Vec fixed(x.begin(), x.end() - 1);
        try {
            x[n - 1] = implicit_solve(def, fixed, n - 1, x[n - 1], tol);
            return true;
        } catch (const AmmError&) {
            return false;
        }
    };

    Vec x, xp, g(n), mid(n);
    int case_idx = 0;
    for (int s = 0; s < samples; ++s) {
        // (a) monotone: bump at least one coordinate upward.
        sample_point(x);
        xp = x;
        bool bumped = false;
        for (int i = 0; i < n; ++i) {
            if (rng.uniform(0, 1) < 0.5) {
                xp[i] += rng.uniform(0.01, 0.5) * std::abs(x[i] == 0 ? 1.0 : x[i]);
                bumped = true;
            }
        }
        if (!bumped) xp[static_cast<int>(rng.integer(n))] += 0.1;
        double a0, a1;
        bool eval_ok = true;
        try {
            a0 = def.family_impl().evaluate(x);
            a1 = def.family_impl().evaluate(xp);
        } catch (const AmmError&) {
            eval_ok = false;
        }
        if (eval_ok)
            rep.add("monotone", case_idx, a1 > a0 ? 0.0 : a0 - a1, 0.0, a1 > a0);

        // (c) gradient positivity.
        if (eval_ok) {
            bool pos = true;
            double worst = 0;
            try {
                def.family_impl().gradient(x, g, tol);
                for (double gi : g) {
                    if (!(gi > 0)) pos = false;
                    worst = std::min(worst, gi);
                }
            } catch (const AmmError&) {
                pos = false;
            }
            rep.add("gradient-positive", case_idx, pos ? 0.0 : -worst, 0.0, pos);
        }
        ++case_idx;
    }

    // (b) strict convexity of the upper contour set on on-manifold pairs.
    int pairs = 0, attempts = 0;
    const int want_pairs = std::max(samples / 4, 8);
    while (pairs < want_pairs && attempts < 20 * want_pairs) {
        ++attempts;
        Vec u, v;
        if (!manifold_point(u) || !manifold_point(v)) continue;
        double dist = 0;
        for (int i = 0; i < n; ++i) dist += (u[i] - v[i]) * (u[i] - v[i]);
        dist = std::sqrt(dist);
        if (dist < 1e-6) continue;
        for (double t : {0.25, 0.5, 0.75}) {
            for (int i = 0; i < n; ++i) mid[i] = t * u[i] + (1 - t) * v[i];
            double am;
            try {
                am = def.family_impl().evaluate(mid);
                def.family_impl().gradient(mid, g, tol);
            } catch (const AmmError&) {
                continue;
            }
            const double margin = 1e-10 * (1.0 + norm2(g) * dist);
            rep.add("convex-strict", pairs, am, margin, am > margin);
        }
        ++pairs;
    }
    return rep;
}

}  // namespace ammnet
