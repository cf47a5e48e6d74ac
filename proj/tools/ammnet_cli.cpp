// Command-line front end: loads a network configuration and dispatches
// evaluation, stable-point, trade, composition, virtualization, projection
// and verification commands.
//
// Exit codes: 0 success, 1 check/operation failure, 2 usage or config error.
// Every global flag can also be set through the environment with the
// AMMNET_ prefix (AMMNET_CONFIG, AMMNET_TOL, AMMNET_SEED, AMMNET_SAMPLES,
// AMMNET_CSV, AMMNET_DIGITS).

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "ammnet/config.hpp"
#include "ammnet/verify.hpp"

namespace {

using namespace ammnet;

double parse_cli_number(const std::string& s, const std::string& where) {
    return parse_number(nlohmann::json(s), where);
}

Vec parse_list(const std::string& s, const std::string& where) {
    Vec out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ','))
        out.push_back(parse_cli_number(item, where));
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

int digits_flag = 9;

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(digits_flag) << v;
    return os.str();
}

std::string fmt_vec(std::span<const double> v) {
    std::string s = "(";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt(v[i]);
    }
    return s + ")";
}

struct Ctx {
    std::string config_path;
    double tol_flag = -1.0;
    uint64_t seed = 42;
    int samples = 128;
    std::string csv_path;

    NetworkConfig cfg;
    bool loaded = false;

    const NetworkConfig& config() {
        if (!loaded) {
            if (config_path.empty())
                throw ConfigError("this command needs --config <file>");
            cfg = load_config(config_path);
            if (tol_flag > 0) cfg.tolerances.kkt = tol_flag;
            if (cfg.seed && seed == 42) seed = *cfg.seed;
            loaded = true;
        }
        return cfg;
    }
    Tolerances tol() {
        if (loaded || !config_path.empty()) return config().tolerances;
        Tolerances t;
        if (tol_flag > 0) t.kkt = tol_flag;
        return t;
    }
};

int hidden_index(const NamedAmm& amm, const std::string& asset) {
    const auto it = std::find(amm.assets.begin(), amm.assets.end(), asset);
    if (it == amm.assets.end())
        throw ConfigError("AMM '" + amm.name + "' does not trade asset '" + asset + "'");
    return static_cast<int>(it - amm.assets.begin());
}

void cmd_eval(Ctx& ctx, const std::string& name, const std::string& state_s) {
    const NamedAmm& amm = ctx.config().find(name);
    const Tolerances tol = ctx.tol();
    Vec x = state_s.empty() ? amm.instance.state.q
                            : parse_list(state_s, "--state");
    const double a = evaluate(amm.instance.def, x, tol);
    const Vec g = gradient(amm.instance.def, x, tol);
    std::cout << amm.name << " value A" << fmt_vec(x) << " = " << fmt(a) << "\n"
              << "gradient = " << fmt_vec(g) << "\n";
}

void cmd_stable(Ctx& ctx, const std::string& name, const std::string& val_s) {
    const NamedAmm& amm = ctx.config().find(name);
    const Tolerances tol = ctx.tol();
    const Valuation v = val_s.empty()
                            ? ctx.config().market_for(amm)
                            : Valuation(parse_list(val_s, "--valuation"), tol);
    const StablePointResult r = stable_point(amm.instance.def, v, {}, tol);
    std::cout << amm.name << " stable point for " << fmt_vec(v.w) << ":\n"
              << "state    = " << fmt_vec(r.state.q) << "\n"
              << "lambda   = " << fmt(r.lagrange_lambda) << "\n"
              << "kkt      = " << fmt(r.residual_kkt) << "\n"
              << "manifold = " << fmt(r.residual_manifold) << "\n";
}

void cmd_trade(Ctx& ctx, const std::string& name, const std::string& deltas_s,
               const std::string& free_asset) {
    const NamedAmm& amm = ctx.config().find(name);
    const Tolerances tol = ctx.tol();
    const int free_idx = hidden_index(amm, free_asset);
    const Vec deltas = parse_list(deltas_s, "--deltas");
    const auto [next, pl] = trade(amm.instance, deltas, free_idx, tol);
    std::cout << amm.name << " state " << fmt_vec(amm.instance.state.q) << " -> "
              << fmt_vec(next.state.q) << "\n"
              << "profit-loss (old - new) = " << fmt_vec(pl.deltas) << "\n";
}

void print_instance(const char* tag, const AmmInstance& inst) {
    std::cout << tag << " " << inst.def.family() << " over ";
    if (inst.def.labels().empty()) {
        std::cout << inst.def.dim() << " assets";
    } else {
        for (size_t i = 0; i < inst.def.labels().size(); ++i)
            std::cout << (i ? "," : "") << inst.def.labels()[i];
    }
    std::cout << " at " << fmt_vec(inst.state.q) << "\n";
}

void cmd_compose(Ctx& ctx, const std::string& mode, const std::string& amms_s,
                 const std::string& hidden_val_s, double split_t,
                 double optimal_amount) {
    const NetworkConfig& cfg = ctx.config();
    const Tolerances tol = ctx.tol();
    std::vector<std::string> names;
    {
        std::istringstream is(amms_s);
        std::string n;
        while (std::getline(is, n, ',')) names.push_back(n);
    }
    if (names.size() != 2)
        throw ConfigError("--amms: compose expects exactly two AMM names");
    const NamedAmm& a = cfg.find(names[0]);
    const NamedAmm& b = cfg.find(names[1]);

    if (mode == "seq") {
        std::vector<int> ha, hb;
        for (size_t i = 0; i < a.assets.size(); ++i)
            for (size_t j = 0; j < b.assets.size(); ++j)
                if (a.assets[i] == b.assets[j]) {
                    ha.push_back(static_cast<int>(i));
                    hb.push_back(static_cast<int>(j));
                }
        if (ha.empty())
            throw ConfigError("seq compose: the two AMMs share no asset");
        AmmInstance comp = [&] {
            if (ha.size() == 1)
                return seq_compose_many_to_one(a.instance, ha[0], b.instance, hb[0],
                                               tol);
            Valuation w = [&] {
                if (!hidden_val_s.empty())
                    return Valuation(parse_list(hidden_val_s, "--hidden-valuation"),
                                     tol);
                if (cfg.market_valuation) {
                    std::vector<int> subset;
                    for (int i : ha) {
                        const auto it = std::find(cfg.assets.begin(),
                                                  cfg.assets.end(), a.assets[i]);
                        subset.push_back(static_cast<int>(it - cfg.assets.begin()));
                    }
                    return inherit_valuation(*cfg.market_valuation, subset, tol);
                }
                throw ConfigError(
                    "seq compose with several hidden assets needs --hidden-valuation "
                    "or a market_valuation in the config");
            }();
            return seq_compose_many_to_many(a.instance, ha, b.instance, hb, w, tol);
        }();
        print_instance("composed:", comp);
        const double x0 = comp.state.q[0];
        std::cout << "graph samples (first input varied, others at anchor):\n";
        for (double s : {0.8, 1.0, 1.25}) {
            Vec head(comp.state.q.begin(), comp.state.q.end() - 1);
            head[0] = s * x0;
            try {
                std::cout << "  h" << fmt_vec(head) << " = "
                          << fmt(graph_value(comp.def, head, -1, tol)) << "\n";
            } catch (const InfeasibleError&) {
                std::cout << "  h" << fmt_vec(head) << " = infeasible\n";
            }
        }
        return;
    }
    if (mode == "par") {
        if (a.assets != b.assets)
            throw ConfigError("par compose: constituents must trade identical assets");
        if (optimal_amount > 0) {
            const double t = optimal_split(a.instance, b.instance, optimal_amount, tol);
            const double ret =
                par_return(a.instance, b.instance, t, optimal_amount, tol);
            std::cout << "optimal split t* = " << fmt(t) << "\n"
                      << "leg amounts      = " << fmt(t * optimal_amount) << " / "
                      << fmt((1.0 - t) * optimal_amount) << "\n"
                      << "total return     = " << fmt(ret) << "\n";
            return;
        }
        const Vec t(a.assets.size() - 1, split_t);
        const AmmInstance comp = par_compose(a.instance, b.instance, t, tol);
        print_instance("composed:", comp);
        std::cout << "coordinates are trade deltas from the anchors; split t = "
                  << fmt(split_t) << "\n";
        return;
    }
    throw ConfigError("--mode must be 'seq' or 'par'");
}

void cmd_virtualize(Ctx& ctx, const std::string& name, const std::string& subset_s,
                    const std::string& val_s) {
    const NamedAmm& amm = ctx.config().find(name);
    const Tolerances tol = ctx.tol();
    std::vector<int> subset;
    {
        std::istringstream is(subset_s);
        std::string a;
        while (std::getline(is, a, ',')) subset.push_back(hidden_index(amm, a));
    }
    const Valuation v(parse_list(val_s, "--valuation"), tol);
    const auto [vinst, spec] = virtualize(amm.instance, subset, v, tol);
    print_instance("virtualized:", vinst);
    std::cout << "virtual units c = " << fmt(spec.c_units) << "\n"
              << "residue r       = " << fmt_vec(spec.residue_r) << "\n";
}

void cmd_project(Ctx& ctx, const std::string& name, const std::string& fix_s) {
    const NamedAmm& amm = ctx.config().find(name);
    const Tolerances tol = ctx.tol();
    std::vector<int> fixed_idx;
    Vec fixed_val, remaining;
    {
        std::istringstream is(fix_s);
        std::string part;
        while (std::getline(is, part, ',')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--fix: expected ASSET=VALUE pairs");
            fixed_idx.push_back(hidden_index(amm, part.substr(0, eq)));
            fixed_val.push_back(parse_cli_number(part.substr(eq + 1), "--fix"));
        }
    }
    const AmmDef proj = project(amm.instance.def, fixed_idx, fixed_val);
    for (int i = 0; i < amm.instance.def.dim(); ++i)
        if (std::find(fixed_idx.begin(), fixed_idx.end(), i) == fixed_idx.end())
            remaining.push_back(amm.instance.state.q[i]);
    std::cout << "projected " << amm.name << " -> " << proj.dim() << " assets (";
    for (size_t i = 0; i < proj.labels().size(); ++i)
        std::cout << (i ? "," : "") << proj.labels()[i];
    std::cout << ")\n"
              << "value at remaining state " << fmt_vec(remaining) << " = "
              << fmt(evaluate(proj, remaining, tol)) << "\n";
}

int cmd_verify(Ctx& ctx, bool builtin) {
    const Tolerances tol = ctx.tol();
    VerifyReport rep;
    if (builtin) {
        rep = run_builtin_verify(ctx.seed, ctx.samples, tol);
    } else {
        std::vector<AmmDef> defs;
        for (const NamedAmm& a : ctx.config().amms)
            defs.push_back(a.instance.def);
        rep = run_axiom_suite(defs, ctx.samples, ctx.seed, tol);
    }
    if (!ctx.csv_path.empty()) {
        std::ofstream out(ctx.csv_path);
        if (!out) throw ConfigError("cannot write CSV to " + ctx.csv_path);
        out << to_csv(rep);
    }
    std::map<std::string, std::pair<int, int>> per_check;  // unexpected / total
    for (const CaseResult& c : rep.cases) {
        auto& [bad, total] = per_check[c.check_id];
        ++total;
        if (c.pass == c.expected_failure) ++bad;
    }
    std::cout << "suite " << rep.suite << " seed " << rep.seed << "\n";
    for (const auto& [id, counts] : per_check)
        std::cout << "  " << std::left << std::setw(30) << id << counts.second
                  << " cases, " << counts.first << " unexpected failures\n";
    const int bad = rep.unexpected_failures();
    std::cout << (bad == 0 ? "PASS" : "FAIL") << ": " << rep.cases.size()
              << " cases, " << bad << " unexpected failures, "
              << std::setprecision(3) << rep.elapsed_seconds << " s\n";
    return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AMM network toolkit: manifolds, stable points, trades, "
                 "composition, and property verification"};
    app.require_subcommand(1);
    Ctx ctx;

    app.add_option("--config", ctx.config_path, "network configuration file (JSON)")
        ->envname("AMMNET_CONFIG");
    app.add_option("--tol", ctx.tol_flag, "stable-point KKT tolerance override")
        ->envname("AMMNET_TOL");
    app.add_option("--seed", ctx.seed, "random seed for sampled checks")
        ->envname("AMMNET_SEED");
    app.add_option("--samples", ctx.samples, "sample count for sampled checks")
        ->envname("AMMNET_SAMPLES");
    app.add_option("--csv", ctx.csv_path, "write the verification report as CSV")
        ->envname("AMMNET_CSV");
    app.add_option("--digits", digits_flag, "significant digits in printed numbers")
        ->envname("AMMNET_DIGITS");

    std::string amm_name, state_s, val_s, deltas_s, free_asset, mode, amms_s,
        hidden_val_s, subset_s, fix_s;
    double split_t = 0.5, optimal_amount = 0.0;
    bool builtin = false;

    auto* eval = app.add_subcommand("eval", "evaluate an AMM and its gradient");
    eval->add_option("--amm", amm_name, "AMM name from the config")->required();
    eval->add_option("--state", state_s, "comma-separated state (default: config state)");

    auto* stable = app.add_subcommand("stable", "compute a stable point");
    stable->add_option("--amm", amm_name)->required();
    stable->add_option("--valuation", val_s,
                       "comma list over the AMM's assets (default: market valuation)");

    auto* trade_cmd = app.add_subcommand("trade", "apply deltas and re-solve");
    trade_cmd->add_option("--amm", amm_name)->required();
    trade_cmd->add_option("--deltas", deltas_s, "signed deltas for the fixed assets")
        ->required();
    trade_cmd->add_option("--free", free_asset, "asset solved from the level set")
        ->required();

    auto* compose = app.add_subcommand("compose", "compose two AMMs");
    compose->add_option("--mode", mode, "'seq' or 'par'")->required();
    compose->add_option("--amms", amms_s, "two AMM names, comma separated")->required();
    compose->add_option("--hidden-valuation", hidden_val_s,
                        "valuation over shared hidden assets (seq, many-to-many)");
    compose->add_option("--split", split_t, "fixed split t in [0,1] (par)");
    compose->add_option("--optimal-split", optimal_amount,
                        "compute the best split for this input amount (par)");

    auto* virt = app.add_subcommand("virtualize", "merge assets into a virtual one");
    virt->add_option("--amm", amm_name)->required();
    virt->add_option("--subset", subset_s, "assets to merge, comma separated")
        ->required();
    virt->add_option("--valuation", val_s, "valuation over the subset")->required();

    auto* proj = app.add_subcommand("project", "fix coordinates to constants");
    proj->add_option("--amm", amm_name)->required();
    proj->add_option("--fix", fix_s, "ASSET=VALUE pairs, comma separated")->required();

    auto* verify = app.add_subcommand("verify", "run the property suites");
    verify->add_flag("--builtin", builtin, "run the built-in battery (no config needed)");

    // Allow the global flags to appear after the subcommand name.
    for (CLI::App* sub : {eval, stable, trade_cmd, compose, virt, proj, verify})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*eval) cmd_eval(ctx, amm_name, state_s);
        else if (*stable) cmd_stable(ctx, amm_name, val_s);
        else if (*trade_cmd) cmd_trade(ctx, amm_name, deltas_s, free_asset);
        else if (*compose)
            cmd_compose(ctx, mode, amms_s, hidden_val_s, split_t, optimal_amount);
        else if (*virt) cmd_virtualize(ctx, amm_name, subset_s, val_s);
        else if (*proj) cmd_project(ctx, amm_name, fix_s);
        else if (*verify) return cmd_verify(ctx, builtin);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const AmmError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
