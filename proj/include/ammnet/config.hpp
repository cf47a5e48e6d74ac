// Declarative network descriptions: named AMM instances over a shared asset
// list, an optional market valuation, tolerance overrides and a seed.
// Numbers may be written as decimals or simple rationals ("3/4") so exact
// constants survive the round trip through text.
#pragma once

#include <fstream>
#include <optional>

#include <json.hpp>

#include "ammnet/core.hpp"

namespace ammnet {

struct ConfigError : AmmError {
    using AmmError::AmmError;
};

// Accepts JSON numbers, decimal strings, and "p/q" rational strings.
inline double parse_number(const nlohmann::json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        try {
            const auto slash = s.find('/');
            size_t used = 0;
            if (slash == std::string::npos) {
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            }
            const double num = std::stod(s.substr(0, slash), &used);
            if (used != slash) throw std::invalid_argument(s);
            const std::string den_s = s.substr(slash + 1);
            const double den = std::stod(den_s, &used);
            if (used != den_s.size() || den == 0) throw std::invalid_argument(s);
            return num / den;
        } catch (const std::exception&) {
            throw ConfigError(where + ": cannot parse number '" + s + "'");
        }
    }
    throw ConfigError(where + ": expected a number or numeric string");
}

inline Vec parse_vector(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    Vec out;
    for (size_t i = 0; i < j.size(); ++i)
        out.push_back(parse_number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

struct NamedAmm {
    std::string name;
    std::vector<std::string> assets;
    AmmInstance instance;
};

struct NetworkConfig {
    std::vector<std::string> assets;
    std::vector<NamedAmm> amms;
    std::optional<Valuation> market_valuation;  // over all declared assets
    Tolerances tolerances;
    std::optional<uint64_t> seed;

    const NamedAmm& find(const std::string& name) const {
        for (const NamedAmm& a : amms)
            if (a.name == name) return a;
        throw ConfigError("no AMM named '" + name + "' in the configuration");
    }

    // Market valuation renormalized onto one AMM's asset list.
    Valuation market_for(const NamedAmm& amm) const {
        if (!market_valuation)
            throw ConfigError("configuration declares no market_valuation");
        std::vector<int> idx;
        for (const std::string& a : amm.assets) {
            const auto it = std::find(assets.begin(), assets.end(), a);
            idx.push_back(static_cast<int>(it - assets.begin()));
        }
        double kept = 0;
        for (int i : idx) kept += market_valuation->w[i];
        Vec w(idx.size());
        for (size_t j = 0; j < idx.size(); ++j)
            w[j] = market_valuation->w[idx[j]] / kept;
        return Valuation(std::move(w), tolerances);
    }
};

namespace detail {

inline AmmDef def_from_json(const nlohmann::json& j, const std::string& where,
                            std::vector<std::string> labels) {
    if (!j.contains("family") || !j["family"].is_string())
        throw ConfigError(where + ".family: required string");
    const std::string family = j["family"].get<std::string>();
    const int dim = static_cast<int>(labels.size());
    auto level = [&]() {
        if (!j.contains("level")) throw ConfigError(where + ".level: required");
        return parse_number(j["level"], where + ".level");
    };
    try {
        if (family == "constant-product")
            return AmmDef::constant_product(dim, level(), std::move(labels));
        if (family == "constant-mean") {
            if (!j.contains("weights"))
                throw ConfigError(where + ".weights: required for constant-mean");
            Vec w = parse_vector(j["weights"], where + ".weights");
            if (static_cast<int>(w.size()) != dim)
                throw ConfigError(where + ".weights: expected " + std::to_string(dim) +
                                  " entries");
            return AmmDef::constant_mean(std::move(w), level(), std::move(labels));
        }
        if (family == "linear") {
            if (!j.contains("rates"))
                throw ConfigError(where + ".rates: required for linear");
            Vec r = parse_vector(j["rates"], where + ".rates");
            if (static_cast<int>(r.size()) != dim)
                throw ConfigError(where + ".rates: expected " + std::to_string(dim) +
                                  " entries");
            return AmmDef::linear(std::move(r), level(), std::move(labels));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const AmmError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ".family: unknown family '" + family +
                      "' (expected constant-product, constant-mean, or linear)");
}

}  // namespace detail

inline NetworkConfig parse_config(const nlohmann::json& root) {
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    NetworkConfig cfg;

    if (!root.contains("assets") || !root["assets"].is_array())
        throw ConfigError("config.assets: required array of asset names");
    for (const auto& a : root["assets"]) {
        if (!a.is_string() || a.get<std::string>().empty())
            throw ConfigError("config.assets: entries must be non-empty strings");
        const std::string name = a.get<std::string>();
        if (std::find(cfg.assets.begin(), cfg.assets.end(), name) != cfg.assets.end())
            throw ConfigError("config.assets: duplicate asset '" + name + "'");
        cfg.assets.push_back(name);
    }

    if (root.contains("tolerances")) {
        const auto& t = root["tolerances"];
        if (!t.is_object()) throw ConfigError("config.tolerances: expected object");
        auto field = [&](const char* key, double& slot) {
            if (t.contains(key))
                slot = parse_number(t[key], std::string("config.tolerances.") + key);
        };
        field("positivity_floor", cfg.tolerances.positivity_floor);
        field("manifold_rel", cfg.tolerances.manifold_rel);
        field("root_rel", cfg.tolerances.root_rel);
        field("kkt", cfg.tolerances.kkt);
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned())
            throw ConfigError("config.seed: expected a non-negative integer");
        cfg.seed = root["seed"].get<uint64_t>();
    }

    if (!root.contains("amms") || !root["amms"].is_array())
        throw ConfigError("config.amms: required array");
    for (size_t i = 0; i < root["amms"].size(); ++i) {
        const auto& a = root["amms"][i];
        const std::string where = "config.amms[" + std::to_string(i) + "]";
        if (!a.is_object()) throw ConfigError(where + ": expected object");
        if (!a.contains("name") || !a["name"].is_string())
            throw ConfigError(where + ".name: required string");
        NamedAmm named{a["name"].get<std::string>(), {}, AmmInstance{
            AmmDef::constant_product(2, 1.0), StateVector({1.0, 1.0})}};
        for (const NamedAmm& prev : cfg.amms)
            if (prev.name == named.name)
                throw ConfigError(where + ".name: duplicate AMM '" + named.name + "'");

        if (!a.contains("assets") || !a["assets"].is_array())
            throw ConfigError(where + ".assets: required array");
        for (const auto& ref : a["assets"]) {
            if (!ref.is_string()) throw ConfigError(where + ".assets: expected strings");
            const std::string asset = ref.get<std::string>();
            if (std::find(cfg.assets.begin(), cfg.assets.end(), asset) ==
                cfg.assets.end())
                throw ConfigError(where + ".assets: unknown asset '" + asset + "'");
            named.assets.push_back(asset);
        }
        if (named.assets.size() < 2)
            throw ConfigError(where + ".assets: an AMM needs at least 2 assets");

        const AmmDef def = detail::def_from_json(a, where, named.assets);
        if (!a.contains("state")) throw ConfigError(where + ".state: required");
        Vec state = parse_vector(a["state"], where + ".state");
        if (state.size() != named.assets.size())
            throw ConfigError(where + ".state: expected " +
                              std::to_string(named.assets.size()) + " entries");
        try {
            named.instance = AmmInstance(def, StateVector(std::move(state)),
                                         cfg.tolerances);
        } catch (const AmmError& e) {
            throw ConfigError(where + ".state: " + e.what());
        }
        cfg.amms.push_back(std::move(named));
    }

    if (root.contains("market_valuation")) {
        const auto& mv = root["market_valuation"];
        if (!mv.is_object())
            throw ConfigError("config.market_valuation: expected an object keyed by asset");
        Vec w(cfg.assets.size(), -1.0);
        for (const auto& [key, val] : mv.items()) {
            const auto it = std::find(cfg.assets.begin(), cfg.assets.end(), key);
            if (it == cfg.assets.end())
                throw ConfigError("config.market_valuation: unknown asset '" + key + "'");
            w[it - cfg.assets.begin()] =
                parse_number(val, "config.market_valuation." + key);
        }
        for (size_t i = 0; i < w.size(); ++i)
            if (w[i] < 0)
                throw ConfigError("config.market_valuation: missing asset '" +
                                  cfg.assets[i] + "'");
        try {
            cfg.market_valuation = Valuation(std::move(w), cfg.tolerances);
        } catch (const AmmError& e) {
            throw ConfigError(std::string("config.market_valuation: ") + e.what());
        }
    }
    return cfg;
}

inline NetworkConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(root);
}

}  // namespace ammnet
