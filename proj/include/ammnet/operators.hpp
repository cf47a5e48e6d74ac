// Dimension-reduction operators: coordinate projection, inherited
// valuations, asset virtualization with residues, and the scalar solve
// along a valuation direction.
#pragma once

#include "ammnet/core.hpp"
#include "ammnet/stable.hpp"

namespace ammnet {

struct VirtualizationSpec {
    std::vector<int> subset;   // indices of the merged assets, size m >= 2
    Valuation v;               // valuation over the subset
    Vec anchor_b;              // anchor restricted to the subset
    double c_units = 0.0;      // largest c with anchor_b - c v >= 0
    Vec residue_r;             // anchor_b - c_units * v
};

namespace detail {

// Underlying AMM with a subset of coordinates frozen to constants.
class ProjectedFamily final : public Family {
public:
    ProjectedFamily(AmmDef base, std::vector<int> fixed_idx, Vec fixed_val)
        : base_(std::move(base)), fixed_idx_(std::move(fixed_idx)),
          fixed_val_(std::move(fixed_val)) {
        const int n = base_.dim();
        std::vector<bool> used(n, false);
        for (int i : fixed_idx_) {
            if (i < 0 || i >= n || used[i])
                throw AmmError("project: bad fixed coordinate index");
            used[i] = true;
        }
        for (int i = 0; i < n; ++i)
            if (!used[i]) free_idx_.push_back(i);
        if (free_idx_.size() < 2)
            throw AmmError("project: fewer than 2 free coordinates remain");
        for (double v : fixed_val_)
            if (!(v > 0)) throw AmmError("project: fixed coordinates must be positive");
    }
    int dim() const override { return static_cast<int>(free_idx_.size()); }
    double evaluate(std::span<const double> y) const override {
        Vec buf;
        assemble(y, buf);
        return base_.family_impl().evaluate(buf);
    }
    bool analytic_gradient() const override { return base_.analytic_gradient(); }
    void gradient(std::span<const double> y, std::span<double> g,
                  const Tolerances& tol) const override {
        Vec buf;
        assemble(y, buf);
        Vec gfull(base_.dim());
        base_.family_impl().gradient(buf, gfull, tol);
        for (size_t i = 0; i < free_idx_.size(); ++i) g[i] = gfull[free_idx_[i]];
    }
    bool conforming() const override { return base_.conforming(); }
    std::string name() const override { return "projected:" + base_.family(); }
    Vec anchor() const override {
        const Vec a = base_.anchor();
        if (a.empty()) return {};
        Vec out(free_idx_.size());
        for (size_t i = 0; i < free_idx_.size(); ++i) out[i] = a[free_idx_[i]];
        return out;
    }

private:
    void assemble(std::span<const double> y, Vec& buf) const {
        buf.resize(base_.dim());
        for (size_t i = 0; i < fixed_idx_.size(); ++i) buf[fixed_idx_[i]] = fixed_val_[i];
        for (size_t i = 0; i < free_idx_.size(); ++i) buf[free_idx_[i]] = y[i];
    }
    AmmDef base_;
    std::vector<int> fixed_idx_;
    Vec fixed_val_;
    std::vector<int> free_idx_;
};

// Merged-asset AMM: (A|v)(x, z) = A(x, v z + r) with the merged coordinate
// appended last and the untouched coordinates keeping their order.
class VirtualizedFamily final : public Family {
public:
    VirtualizedFamily(AmmDef base, VirtualizationSpec spec)
        : base_(std::move(base)), spec_(std::move(spec)) {
        const int n = base_.dim();
        std::vector<bool> used(n, false);
        for (int i : spec_.subset) {
            if (i < 0 || i >= n || used[i])
                throw AmmError("virtualize: bad subset index");
            used[i] = true;
        }
        if (spec_.subset.size() < 2)
            throw AmmError("virtualize: subset must merge at least 2 assets");
        for (int i = 0; i < n; ++i)
            if (!used[i]) keep_idx_.push_back(i);
        if (keep_idx_.empty())
            throw AmmError("virtualize: result would be 1-dimensional, not an AMM");
    }
    int dim() const override { return static_cast<int>(keep_idx_.size()) + 1; }
    double evaluate(std::span<const double> xz) const override {
        Vec buf;
        assemble(xz, buf);
        return base_.family_impl().evaluate(buf);
    }
    bool analytic_gradient() const override { return base_.analytic_gradient(); }
    void gradient(std::span<const double> xz, std::span<double> g,
                  const Tolerances& tol) const override {
        Vec buf;
        assemble(xz, buf);
        Vec gfull(base_.dim());
        base_.family_impl().gradient(buf, gfull, tol);
        for (size_t i = 0; i < keep_idx_.size(); ++i) g[i] = gfull[keep_idx_[i]];
        double gz = 0;
        for (size_t j = 0; j < spec_.subset.size(); ++j)
            gz += spec_.v.w[j] * gfull[spec_.subset[j]];
        g[keep_idx_.size()] = gz;
    }
    bool conforming() const override { return base_.conforming(); }
    std::string name() const override { return "virtualized:" + base_.family(); }
    const VirtualizationSpec& spec() const { return spec_; }
    const AmmDef& base() const { return base_; }
    const std::vector<int>& kept() const { return keep_idx_; }

private:
    void assemble(std::span<const double> xz, Vec& buf) const {
        buf.resize(base_.dim());
        const double z = xz[keep_idx_.size()];
        for (size_t i = 0; i < keep_idx_.size(); ++i) buf[keep_idx_[i]] = xz[i];
        for (size_t j = 0; j < spec_.subset.size(); ++j)
            buf[spec_.subset[j]] = spec_.v.w[j] * z + spec_.residue_r[j];
    }
    AmmDef base_;
    VirtualizationSpec spec_;
    std::vector<int> keep_idx_;
};

}  // namespace detail

// Fixes the listed coordinates to constants, yielding a lower-dimensional
// AMM over the remaining assets. Identity when nothing is fixed.
inline AmmDef project(const AmmDef& def, const std::vector<int>& fixed_idx,
                      const Vec& fixed_val) {
    if (fixed_idx.size() != fixed_val.size())
        throw AmmError("project: index/value count mismatch");
    if (fixed_idx.empty()) return def;
    std::vector<std::string> labels;
    if (!def.labels().empty()) {
        std::vector<bool> drop(def.dim(), false);
        for (int i : fixed_idx)
            if (i >= 0 && i < def.dim()) drop[i] = true;
        for (int i = 0; i < def.dim(); ++i)
            if (!drop[i]) labels.push_back(def.labels()[i]);
    }
    return AmmDef(std::make_shared<detail::ProjectedFamily>(def, fixed_idx, fixed_val),
                  std::move(labels));
}

// Renormalizes a valuation onto a nonempty proper subset of its assets.
inline Valuation inherit_valuation(const Valuation& v, const std::vector<int>& subset,
                                   const Tolerances& tol = default_tol()) {
    if (subset.empty()) throw AmmError("inherit_valuation: empty subset");
    double kept = 0;
    for (int i : subset) {
        if (i < 0 || i >= v.dim()) throw AmmError("inherit_valuation: bad index");
        kept += v.w[i];
    }
    if (subset.size() == static_cast<size_t>(v.dim())) {
        Vec w(v.w);
        Vec out(subset.size());
        for (size_t j = 0; j < subset.size(); ++j) out[j] = w[subset[j]];
        return Valuation(std::move(out), tol);
    }
    Vec out(subset.size());
    for (size_t j = 0; j < subset.size(); ++j) out[j] = v.w[subset[j]] / kept;
    return Valuation(std::move(out), tol);
}

// Largest c with b - c v >= 0, plus the leftover residue vector.
inline VirtualizationSpec make_virtualization_spec(const std::vector<int>& subset,
                                                   const Valuation& v,
                                                   const Vec& anchor_b) {
    if (subset.size() != anchor_b.size() ||
        subset.size() != static_cast<size_t>(v.dim()))
        throw AmmError("virtualize: subset / valuation / anchor size mismatch");
    VirtualizationSpec spec;
    spec.subset = subset;
    spec.v = v;
    spec.anchor_b = anchor_b;
    double c = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < subset.size(); ++j) c = std::min(c, anchor_b[j] / v.w[j]);
    spec.c_units = c;
    spec.residue_r.resize(subset.size());
    for (size_t j = 0; j < subset.size(); ++j)
        spec.residue_r[j] = anchor_b[j] - c * v.w[j];
    // The binding coordinate has an exact zero residue.
    for (double& r : spec.residue_r)
        if (std::abs(r) < 1e-15 * c) r = 0.0;
    return spec;
}

// Merges the subset assets into one virtual asset along valuation v,
// anchored at the instance's current state.
inline std::pair<AmmInstance, VirtualizationSpec> virtualize(
    const AmmInstance& inst, const std::vector<int>& subset, const Valuation& v,
    const Tolerances& tol = default_tol()) {
    Vec anchor_b(subset.size());
    for (size_t j = 0; j < subset.size(); ++j) {
        const int i = subset[j];
        if (i < 0 || i >= inst.def.dim()) throw AmmError("virtualize: bad subset index");
        anchor_b[j] = inst.state.q[i];
    }
    VirtualizationSpec spec = make_virtualization_spec(subset, v, anchor_b);
    if (!(spec.c_units > tol.positivity_floor))
        throw AmmError("virtualize: zero virtual units at the anchor");

    std::vector<std::string> labels;
    if (!inst.def.labels().empty()) {
        std::vector<bool> drop(inst.def.dim(), false);
        for (int i : subset) drop[i] = true;
        for (int i = 0; i < inst.def.dim(); ++i)
            if (!drop[i]) labels.push_back(inst.def.labels()[i]);
        std::string merged = "virtual(";
        for (size_t j = 0; j < subset.size(); ++j) {
            if (j) merged += '+';
            merged += inst.def.labels()[subset[j]];
        }
        merged += ')';
        labels.push_back(std::move(merged));
    }
    auto fam = std::make_shared<detail::VirtualizedFamily>(inst.def, spec);
    const auto& kept = fam->kept();
    Vec state(kept.size() + 1);
    for (size_t i = 0; i < kept.size(); ++i) state[i] = inst.state.q[kept[i]];
    state[kept.size()] = spec.c_units;
    AmmDef vdef(fam, std::move(labels));
    return {AmmInstance(std::move(vdef), StateVector(std::move(state)), tol),
            std::move(spec)};
}

// Maps a virtual state (x, z) back to underlying coordinates via v z + r.
// The x block is passed through in kept order; merged coordinates land at
// their original indices.
inline StateVector devirtualize(const AmmDef& virtual_def,
                                std::span<const double> virtual_state) {
    auto* fam =
        dynamic_cast<const detail::VirtualizedFamily*>(&virtual_def.family_impl());
    if (!fam) throw AmmError("devirtualize: definition is not virtualized");
    const auto& spec = fam->spec();
    const auto& kept = fam->kept();
    if (virtual_state.size() != kept.size() + 1)
        throw AmmError("devirtualize: state dimension mismatch");
    const double z = virtual_state[kept.size()];
    if (!(z > 0)) throw AmmError("devirtualize: virtual quantity must be positive");
    Vec out(fam->base().dim());
    for (size_t i = 0; i < kept.size(); ++i) out[kept[i]] = virtual_state[i];
    for (size_t j = 0; j < spec.subset.size(); ++j)
        out[spec.subset[j]] = spec.v.w[j] * z + spec.residue_r[j];
    return StateVector(std::move(out));
}

// Unique t with A(a_prime, b + t v) = 0. The map t -> A is strictly
// increasing along direction v; t may be negative. Feasibility requires
// b + t v to stay in the positive orthant.
inline double solve_along_valuation(const AmmDef& def, std::span<const double> a_prime,
                                    std::span<const double> b, const Valuation& v,
                                    const Tolerances& tol = default_tol()) {
    const size_t m = b.size();
    if (static_cast<size_t>(v.dim()) != m)
        throw AmmError("solve_along_valuation: valuation dimension mismatch");
    if (a_prime.size() + m != static_cast<size_t>(def.dim()))
        throw AmmError("solve_along_valuation: block sizes do not cover the AMM");
    for (double x : a_prime)
        if (!(x > 0)) throw AmmError("solve_along_valuation: a' must be positive");
    for (double x : b)
        if (!(x > 0)) throw AmmError("solve_along_valuation: b must be positive");

    // b + t v > 0  <=>  t > t_min
    double t_min = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < m; ++j) t_min = std::max(t_min, -b[j] / v.w[j]);

    Vec buf(def.dim());
    auto eval = [&](double t) {
        for (size_t i = 0; i < a_prime.size(); ++i) buf[i] = a_prime[i];
        for (size_t j = 0; j < m; ++j) buf[a_prime.size() + j] = b[j] + t * v.w[j];
        return def.family_impl().evaluate(buf);
    };

    const double f0 = eval(0.0);
    if (f0 == 0) return 0.0;

    const double scale = norm1(b);
    double lo, hi;
    if (f0 < 0) {
        lo = 0.0;
        hi = scale;
        while (eval(hi) < 0) {
            hi *= 2;
            if (hi > scale * tol.bracket_span)
                throw InfeasibleError("solve_along_valuation: no root above");
        }
    } else {
        hi = 0.0;
        // Walk toward the positivity boundary t_min.
        double step = 0.5 * (0.0 - t_min);
        lo = 0.0 - step;
        while (eval(lo) > 0) {
            step = 0.5 * (lo - t_min);
            if (step < 1e-15 * std::max(1.0, std::abs(t_min)))
                throw InfeasibleError(
                    "solve_along_valuation: solution leaves the positive orthant");
            lo -= step;
        }
    }

    // Bisection tightened by Newton along t.
    Vec g(def.dim());
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < tol.max_newton_iters; ++it) {
        const double f = eval(t);
        def.family_impl().gradient(buf, g, tol);
        double dfdt = 0;
        for (size_t j = 0; j < m; ++j) dfdt += g[a_prime.size() + j] * v.w[j];
        if (std::abs(f) <= tol.root_rel * (1.0 + norm2(g))) return t;
        if (f > 0) hi = t; else lo = t;
        double tnew = (dfdt > 0) ? t - f / dfdt : t;
        if (!(tnew > lo) || !(tnew < hi)) tnew = 0.5 * (lo + hi);
        if (tnew == t) return t;
        t = tnew;
    }
    throw AmmError("solve_along_valuation: did not converge");
}

}  // namespace ammnet
