// Sequential composition (one-to-one, many-to-one, many-to-many through
// virtualization), parallel composition with optimal splitting, and fee
// modeling via a per-trade linear leg.
#pragma once

#include <limits>

#include "ammnet/core.hpp"
#include "ammnet/operators.hpp"

namespace ammnet {

// Value of the graph coordinate `free_idx` given the remaining coordinates.
// Closed form for the analytic families, implicit solve otherwise.
inline double graph_value(const AmmDef& def, std::span<const double> head,
                          int free_idx = -1, const Tolerances& tol = default_tol()) {
    const int n = def.dim();
    if (free_idx < 0) free_idx = n - 1;
    if (static_cast<int>(head.size()) != n - 1)
        throw AmmError("graph_value: head must cover all but one coordinate");

    double out;
    if (def.family_impl().closed_graph(head, free_idx, tol, out)) return out;
    return implicit_solve(def, head, free_idx, 0.0, tol);
}

// d(graph)/d(head_i) from the implicit function theorem: -A_i / A_free.
inline double graph_derivative(const AmmDef& def, std::span<const double> head,
                               int head_i, int free_idx = -1,
                               const Tolerances& tol = default_tol()) {
    const int n = def.dim();
    if (free_idx < 0) free_idx = n - 1;
    const double z = graph_value(def, head, free_idx, tol);
    Vec full;
    detail::splice(head, free_idx, z, full);
    Vec g(n);
    def.family_impl().gradient(full, g, tol);
    const int full_i = head_i < free_idx ? head_i : head_i + 1;
    return -g[full_i] / g[free_idx];
}

namespace detail {

// Evaluation core shared by sequential composition and the fee wrapper:
// route f(anchor) - f(x) units of the hidden asset downstream, then read
// the downstream graph. Throws when the hidden pool would be depleted.
inline double seq_graph_eval(const std::function<double(std::span<const double>)>& up_f,
                             double up_f_anchor, const AmmDef& dn, int dn_hidden,
                             int dn_out, double dn_hidden_anchor,
                             std::span<const double> x, std::span<const double> y,
                             const Tolerances& tol) {
    const double fx = up_f(x);
    const double z = dn_hidden_anchor + (up_f_anchor - fx);
    if (!(z > tol.positivity_floor))
        throw InfeasibleError("sequential composition: hidden asset depleted");
    Vec head(dn.dim() - 1);
    size_t j = 0;
    size_t yi = 0;
    for (int i = 0; i < dn.dim(); ++i) {
        if (i == dn_out) continue;
        head[j++] = (i == dn_hidden) ? z : y[yi++];
    }
    return graph_value(dn, head, dn_out, tol);
}

// Graph-form sequential composition over (up non-hidden, dn non-hidden
// non-output, output-last) coordinates, in absolute units.
class SeqComposedFamily final : public Family {
public:
    SeqComposedFamily(AmmInstance up, int up_hidden, AmmInstance dn, int dn_hidden,
                      int dn_out, Tolerances tol)
        : up_(std::move(up)), dn_(std::move(dn)), up_hidden_(up_hidden),
          dn_hidden_(dn_hidden), dn_out_(dn_out), tol_(tol) {
        if (up_hidden_ < 0 || up_hidden_ >= up_.def.dim())
            throw AmmError("seq_compose: bad upstream hidden index");
        if (dn_hidden_ < 0 || dn_hidden_ >= dn_.def.dim() || dn_out_ < 0 ||
            dn_out_ >= dn_.def.dim() || dn_out_ == dn_hidden_)
            throw AmmError("seq_compose: bad downstream indices");
        if (!up_.def.conforming() || !dn_.def.conforming())
            throw AmmError("seq_compose: constituents must satisfy the AMM axioms");
        m_ = up_.def.dim() - 1;
        k_ = dn_.def.dim() - 2;
        up_f_anchor_ = up_.state.q[up_hidden_];
        dn_hidden_anchor_ = dn_.state.q[dn_hidden_];
    }

    int dim() const override { return m_ + k_ + 1; }

    double evaluate(std::span<const double> xyz) const override {
        return xyz[m_ + k_] - base(xyz.subspan(0, m_ + k_));
    }

    bool analytic_gradient() const override {
        return up_.def.analytic_gradient() && dn_.def.analytic_gradient();
    }

    // Chain rule through both constituent graphs; all components positive.
    void gradient(std::span<const double> xyz, std::span<double> g,
                  const Tolerances& tol) const override {
        const auto x = xyz.subspan(0, m_);
        const double fx = graph_value(up_.def, x, up_hidden_, tol);
        const double z = dn_hidden_anchor_ + (up_f_anchor_ - fx);
        if (!(z > tol.positivity_floor))
            throw InfeasibleError("sequential composition: hidden asset depleted");
        Vec head(dn_.def.dim() - 1);
        int hidden_pos = -1;
        size_t j = 0, yi = 0;
        for (int i = 0; i < dn_.def.dim(); ++i) {
            if (i == dn_out_) continue;
            if (i == dn_hidden_) {
                hidden_pos = static_cast<int>(j);
                head[j++] = z;
            } else {
                head[j++] = xyz[m_ + yi++];
            }
        }
        const double gh = graph_derivative(dn_.def, head, hidden_pos, dn_out_, tol);
        for (int i = 0; i < m_; ++i)
            g[i] = gh * graph_derivative(up_.def, x, i, up_hidden_, tol);
        j = 0;
        yi = 0;
        for (int i = 0; i < dn_.def.dim(); ++i) {
            if (i == dn_out_) continue;
            const int pos = static_cast<int>(j++);
            if (i == dn_hidden_) continue;
            g[m_ + yi++] = -graph_derivative(dn_.def, head, pos, dn_out_, tol);
        }
        g[m_ + k_] = 1.0;
    }

    std::string name() const override {
        return "seq(" + up_.def.family() + "," + dn_.def.family() + ")";
    }

    Vec anchor() const override {
        Vec a;
        a.reserve(m_ + k_ + 1);
        for (int i = 0; i < up_.def.dim(); ++i)
            if (i != up_hidden_) a.push_back(up_.state.q[i]);
        for (int i = 0; i < dn_.def.dim(); ++i)
            if (i != dn_hidden_ && i != dn_out_) a.push_back(dn_.state.q[i]);
        a.push_back(dn_.state.q[dn_out_]);
        return a;
    }

    double domain_floor(int i) const override {
        if (i < m_) return up_.def.family_impl().domain_floor(up_index(i));
        return 0.0;
    }

    bool closed_graph(std::span<const double> head, int free_idx, const Tolerances&,
                      double& out) const override {
        if (free_idx != m_ + k_) return false;
        out = base(head);
        return true;
    }

    // h(x, y): the output coordinate as a function of the rest.
    double base(std::span<const double> xy) const {
        auto up_f = [this](std::span<const double> x) {
            return graph_value(up_.def, x, up_hidden_, tol_);
        };
        return seq_graph_eval(up_f, up_f_anchor_, dn_.def, dn_hidden_, dn_out_,
                              dn_hidden_anchor_, xy.subspan(0, m_),
                              xy.subspan(m_, k_), tol_);
    }

    const AmmInstance& upstream() const { return up_; }
    const AmmInstance& downstream() const { return dn_; }
    int upstream_inputs() const { return m_; }

private:
    int up_index(int composed_i) const {
        int j = 0;
        for (int i = 0; i < up_.def.dim(); ++i) {
            if (i == up_hidden_) continue;
            if (j == composed_i) return i;
            ++j;
        }
        throw AmmError("seq_compose: index out of range");
    }
    AmmInstance up_, dn_;
    int up_hidden_, dn_hidden_, dn_out_;
    Tolerances tol_;
    int m_ = 0, k_ = 0;
    double up_f_anchor_ = 0, dn_hidden_anchor_ = 0;
};

// Delta-coordinate parallel composition: h_t(x) = f(a + t*x) + g(b + (1-t)*x).
class ParComposedFamily final : public Family {
public:
    ParComposedFamily(AmmInstance left, AmmInstance right, Vec t, Tolerances tol)
        : left_(std::move(left)), right_(std::move(right)), t_(std::move(t)),
          tol_(tol) {
        if (left_.def.dim() != right_.def.dim())
            throw AmmError("par_compose: constituent dimensions differ");
        if (!left_.def.conforming() || !right_.def.conforming())
            throw AmmError("par_compose: constituents must satisfy the AMM axioms");
        const int n = left_.def.dim();
        if (static_cast<int>(t_.size()) != n - 1)
            throw AmmError("par_compose: split vector needs one entry per input asset");
        for (double ti : t_)
            if (!(ti >= 0.0 && ti <= 1.0))
                throw AmmError("par_compose: split entries must lie in [0,1]");
        floors_.resize(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            double lo = -std::numeric_limits<double>::infinity();
            if (t_[i] > 0) lo = std::max(lo, -left_.state.q[i] / t_[i]);
            if (t_[i] < 1) lo = std::max(lo, -right_.state.q[i] / (1.0 - t_[i]));
            floors_[i] = lo;
        }
    }

    int dim() const override { return left_.def.dim(); }

    double evaluate(std::span<const double> xy) const override {
        const int m = dim() - 1;
        return xy[m] - base(xy.subspan(0, m));
    }

    bool analytic_gradient() const override {
        return left_.def.analytic_gradient() && right_.def.analytic_gradient();
    }

    void gradient(std::span<const double> xy, std::span<double> g,
                  const Tolerances& tol) const override {
        const int m = dim() - 1;
        Vec lh(m), rh(m);
        for (int i = 0; i < m; ++i) {
            lh[i] = left_.state.q[i] + t_[i] * xy[i];
            rh[i] = right_.state.q[i] + (1.0 - t_[i]) * xy[i];
            if (!(lh[i] > tol.positivity_floor) || !(rh[i] > tol.positivity_floor))
                throw InfeasibleError("par_compose: delta exhausts a constituent");
        }
        for (int i = 0; i < m; ++i) {
            double d = 0;
            if (t_[i] > 0) d += t_[i] * graph_derivative(left_.def, lh, i, -1, tol);
            if (t_[i] < 1)
                d += (1.0 - t_[i]) * graph_derivative(right_.def, rh, i, -1, tol);
            g[i] = -d;  // constituent graphs are decreasing, so this is positive
        }
        g[m] = 1.0;
    }

    std::string name() const override {
        return "par(" + left_.def.family() + "," + right_.def.family() + ")";
    }

    // Input coordinates are trade deltas from the anchors; 0 is interior.
    double domain_floor(int i) const override {
        return i < dim() - 1 ? floors_[i] : 0.0;
    }

    bool closed_graph(std::span<const double> head, int free_idx, const Tolerances&,
                      double& out) const override {
        if (free_idx != dim() - 1) return false;
        out = base(head);
        return true;
    }

    Vec anchor() const override {
        Vec a(dim(), 0.0);
        a[dim() - 1] = base(std::span<const double>(a.data(), dim() - 1));
        return a;
    }

    double base(std::span<const double> deltas) const {
        const int m = dim() - 1;
        Vec lh(m), rh(m);
        for (int i = 0; i < m; ++i) {
            lh[i] = left_.state.q[i] + t_[i] * deltas[i];
            rh[i] = right_.state.q[i] + (1.0 - t_[i]) * deltas[i];
            if (!(lh[i] > tol_.positivity_floor) || !(rh[i] > tol_.positivity_floor))
                throw InfeasibleError("par_compose: delta exhausts a constituent");
        }
        return graph_value(left_.def, lh, -1, tol_) +
               graph_value(right_.def, rh, -1, tol_);
    }

    const AmmInstance& left() const { return left_; }
    const AmmInstance& right() const { return right_; }
    const Vec& split() const { return t_; }

private:
    AmmInstance left_, right_;
    Vec t_;
    Tolerances tol_;
    Vec floors_;
};

}  // namespace detail

// General sequential composition with a single hidden asset. Output
// coordinate of the composition is the downstream's dn_out (defaults to its
// last non-hidden coordinate).
inline AmmInstance seq_compose(const AmmInstance& up, int up_hidden,
                               const AmmInstance& dn, int dn_hidden, int dn_out = -1,
                               const Tolerances& tol = default_tol()) {
    if (dn_out < 0) {
        dn_out = dn.def.dim() - 1;
        if (dn_out == dn_hidden) --dn_out;
    }
    auto fam = std::make_shared<detail::SeqComposedFamily>(up, up_hidden, dn, dn_hidden,
                                                           dn_out, tol);
    std::vector<std::string> labels;
    if (!up.def.labels().empty() && !dn.def.labels().empty()) {
        for (int i = 0; i < up.def.dim(); ++i)
            if (i != up_hidden) labels.push_back(up.def.labels()[i]);
        for (int i = 0; i < dn.def.dim(); ++i)
            if (i != dn_hidden && i != dn_out) labels.push_back(dn.def.labels()[i]);
        labels.push_back(dn.def.labels()[dn_out]);
    }
    Vec state = fam->anchor();
    AmmDef def(fam, std::move(labels));
    return AmmInstance(std::move(def), StateVector(std::move(state)), tol);
}

// One-to-one composition of 2-dimensional graphs: A's output feeds B's input.
inline AmmInstance seq_compose_2d(const AmmInstance& a, const AmmInstance& b,
                                  const Tolerances& tol = default_tol()) {
    if (a.def.dim() != 2 || b.def.dim() != 2)
        throw AmmError("seq_compose_2d: constituents must be 2-dimensional");
    return seq_compose(a, 1, b, 0, 1, tol);
}

// Many-to-one: exactly one shared hidden asset, by index in each constituent.
inline AmmInstance seq_compose_many_to_one(const AmmInstance& up, int up_hidden,
                                           const AmmInstance& dn, int dn_hidden,
                                           const Tolerances& tol = default_tol()) {
    return seq_compose(up, up_hidden, dn, dn_hidden, -1, tol);
}

// Many-to-many: merge the shared hidden assets of both constituents into a
// single virtual asset along the caller-supplied hidden valuation, then
// compose many-to-one.
inline AmmInstance seq_compose_many_to_many(const AmmInstance& up,
                                            const std::vector<int>& up_hidden,
                                            const AmmInstance& dn,
                                            const std::vector<int>& dn_hidden,
                                            const Valuation& hidden_valuation,
                                            const Tolerances& tol = default_tol()) {
    if (up_hidden.size() < 2 || up_hidden.size() != dn_hidden.size())
        throw AmmError("seq_compose_many_to_many: need >= 2 shared hidden assets");
    auto [vup, spec_up] = virtualize(up, up_hidden, hidden_valuation, tol);
    auto [vdn, spec_dn] = virtualize(dn, dn_hidden, hidden_valuation, tol);
    // The virtual coordinate sits last in both constituents.
    return seq_compose(vup, vup.def.dim() - 1, vdn, vdn.def.dim() - 1, -1, tol);
}

// The fixed two-constituent fixture showing that composing across several
// hidden assets without virtualization is not a function: two different
// intermediate transfers reach different terminal states.
struct NaiveAmbiguityResult {
    Vec transfer_a;  // (dx, dy) of the first choice
    Vec transfer_b;  // (dx, dy) of the second choice
    Vec state_a;     // resulting (w, z)
    Vec state_b;
};

inline NaiveAmbiguityResult demonstrate_naive_ambiguity() {
    // Upstream w*x*y = 1 at (1,1,1); downstream receives the transfers from
    // state (2,2,2); the trader deposits dw = 3.
    NaiveAmbiguityResult r;
    const double dw = 3.0;
    auto run = [&](double dx, double dy) {
        const double w = 1.0 + dw;
        // Upstream constraint fixes (dx, dy): (1+dw)(1+dx)(1+dy) = 1.
        const double up = w * (1.0 + dx) * (1.0 + dy);
        if (std::abs(up - 1.0) > 1e-12)
            throw AmmError("naive ambiguity fixture: inconsistent transfer");
        const double z = 2.0 / ((2.0 - dx) * (2.0 - dy));
        return Vec{w, z};
    };
    r.transfer_a = {-0.5, -0.5};
    r.state_a = run(-0.5, -0.5);
    r.transfer_b = {-0.25, -2.0 / 3.0};
    r.state_b = run(-0.25, -2.0 / 3.0);
    return r;
}

// Parallel composition with a fixed split vector; composed coordinates are
// trade deltas relative to the anchors.
inline AmmInstance par_compose(const AmmInstance& left, const AmmInstance& right,
                               Vec t, const Tolerances& tol = default_tol()) {
    auto fam = std::make_shared<detail::ParComposedFamily>(left, right, std::move(t), tol);
    Vec state = fam->anchor();
    AmmDef def(fam, left.def.labels());
    return AmmInstance(std::move(def), StateVector(std::move(state)), tol);
}

// Output received by a trader who deposits `amount` of the input asset into
// a 2-dimensional parallel composition with split t.
inline double par_return(const AmmInstance& left, const AmmInstance& right, double t,
                         double amount, const Tolerances& tol = default_tol()) {
    if (left.def.dim() != 2 || right.def.dim() != 2)
        throw AmmError("par_return: constituents must be 2-dimensional");
    const double a = left.state.q[0], b = right.state.q[0];
    const double fa = graph_value(left.def, Vec{a}, -1, tol);
    const double gb = graph_value(right.def, Vec{b}, -1, tol);
    const double fx =
        graph_value(left.def, Vec{a + t * amount}, -1, tol);
    const double gx = graph_value(
        right.def, Vec{b + (1.0 - t) * amount}, -1, tol);
    return (fa - fx) + (gb - gx);
}

// Split that maximizes the trader's output: equalize the marginal rates of
// the two constituents, or hand everything to the better one when no
// interior split balances them. Ties at the boundary resolve to t = 0.
inline double optimal_split(const AmmInstance& left, const AmmInstance& right,
                            double amount, const Tolerances& tol = default_tol()) {
    if (left.def.dim() != 2 || right.def.dim() != 2)
        throw AmmError("optimal_split: constituents must be 2-dimensional");
    if (!(amount > 0)) throw AmmError("optimal_split: amount must be positive");
    const double a = left.state.q[0], b = right.state.q[0];

    auto resid = [&](double t) {
        const double fd = graph_derivative(
            left.def, Vec{a + t * amount}, 0, -1, tol);
        const double gd = graph_derivative(
            right.def, Vec{b + (1.0 - t) * amount}, 0, -1,
            tol);
        return fd - gd;  // increasing in t by convexity of both graphs
    };

    const double r0 = resid(0.0), r1 = resid(1.0);
    if (r0 >= 0.0 || r1 <= 0.0) {
        const double ret0 = par_return(left, right, 0.0, amount, tol);
        const double ret1 = par_return(left, right, 1.0, amount, tol);
        return ret1 > ret0 ? 1.0 : 0.0;
    }
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rm = resid(mid);
        if (std::abs(rm) <= tol.kkt) return mid;
        (rm > 0 ? hi : lo) = mid;
        if (hi - lo < 1e-16) break;
    }
    return 0.5 * (lo + hi);
}

enum class FeeSide { input, output };

struct FeeTradeResult {
    Vec final_state;  // underlying AMM state after the fee-laden trade
    double output;    // units received by the trader
};

// The per-trade linear leg, kept in delta coordinates so the anchor
// identities are exact: value(0) = (1-gamma)*delta and value(delta) = 0.
struct LinearFeeLeg {
    double anchor;
    double delta;
    double gamma;
    double value(double d) const { return (1.0 - gamma) * (delta - d); }
};

// Direct fee formula: deposit delta, trade (1-gamma)*delta, fee stays in
// the pool.
inline FeeTradeResult fee_trade_direct(const AmmInstance& inst, double gamma,
                                       double delta, FeeSide side,
                                       const Tolerances& tol = default_tol()) {
    if (inst.def.dim() != 2) throw AmmError("fee trade: AMM must be 2-dimensional");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw AmmError("fee trade: gamma must lie in (0,1)");
    if (!(delta > 0)) throw AmmError("fee trade: delta must be positive");
    const double a = inst.state.q[0];
    const double ga = inst.state.q[1];
    if (side == FeeSide::input) {
        const double y = graph_value(
            inst.def, Vec{a + (1.0 - gamma) * delta}, -1, tol);
        return {{a + delta, y}, ga - y};
    }
    const double y = graph_value(inst.def, Vec{a + delta}, -1,
                                 tol);
    return {{a + delta, y}, (1.0 - gamma) * (ga - y)};
}

// Same trade realized as the explicit sequential composition with the
// linear leg; must agree with the direct route bit-for-bit.
inline FeeTradeResult fee_trade_composed(const AmmInstance& inst, double gamma,
                                         double delta, FeeSide side,
                                         const Tolerances& tol = default_tol()) {
    if (inst.def.dim() != 2) throw AmmError("fee trade: AMM must be 2-dimensional");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw AmmError("fee trade: gamma must lie in (0,1)");
    if (!(delta > 0)) throw AmmError("fee trade: delta must be positive");
    const double a = inst.state.q[0];
    const double ga = inst.state.q[1];
    const LinearFeeLeg leg{a, delta, gamma};
    if (side == FeeSide::input) {
        // Leg before the AMM: route leg.value(0) - leg.value(d) of the
        // hidden asset downstream, exactly the shared sequential evaluator.
        auto up_f = [&leg](std::span<const double> d) { return leg.value(d[0]); };
        const Vec d{delta};
        const double y = detail::seq_graph_eval(up_f, leg.value(0.0), inst.def, 0, 1, a,
                                                d, {}, tol);
        return {{a + delta, y}, ga - y};
    }
    // AMM before the leg: the leg deducts gamma of the output.
    const double y = graph_value(inst.def, Vec{a + delta}, -1,
                                 tol);
    return {{a + delta, y}, (1.0 - gamma) * (ga - y)};
}

}  // namespace ammnet
