#pragma once

#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "flipchain/errors.hpp"
#include "flipchain/harness.hpp"
#include "flipchain/pde.hpp"
#include "flipchain/profile.hpp"

namespace flipchain {

using nlohmann::json;

namespace detail {

inline const json* find_key(const json& j, const std::string& key) {
    if (!j.is_object()) return nullptr;
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline const json& require_key(const json& j, const std::string& path, const std::string& key) {
    const json* v = find_key(j, key);
    if (v == nullptr) throw ConfigError(path + ": required");
    return *v;
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": must be a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + ": must be an integer");
    return j.get<int>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": must be a string");
    return j.get<std::string>();
}

inline std::vector<double> as_number_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(path + ": must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

/// A scalar profile is either a trigonometric series
///   {"const": c, "cos": [...], "sin": [...], "reciprocal": bool}
/// or an interpolation table {"table": [v0, v1, ...]}.
inline ScalarProfile parse_scalar_profile(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": must be an object");
    if (const json* table = find_key(j, "table")) {
        const std::vector<double> values = as_number_array(*table, path + ".table");
        if (values.size() < 4) throw ConfigError(path + ".table: at least 4 values required");
        return table_profile(values);
    }
    double c0 = 0.0;
    std::vector<double> cosc, sinc;
    bool reciprocal = false;
    if (const json* v = find_key(j, "const")) c0 = as_number(*v, path + ".const");
    if (const json* v = find_key(j, "cos")) cosc = as_number_array(*v, path + ".cos");
    if (const json* v = find_key(j, "sin")) sinc = as_number_array(*v, path + ".sin");
    if (const json* v = find_key(j, "reciprocal")) {
        if (!v->is_boolean()) throw ConfigError(path + ".reciprocal: must be a boolean");
        reciprocal = v->get<bool>();
    }
    return series_profile(c0, cosc, sinc, reciprocal);
}

inline Engine parse_engine(const json& j, const std::string& path) {
    const std::string s = as_string(j, path);
    if (s == "particle") return Engine::Particle;
    if (s == "moment-mc") return Engine::MomentMc;
    if (s == "expected-ode") return Engine::ExpectedOde;
    throw ConfigError(path + ": must be one of particle, moment-mc, expected-ode");
}

inline PdeScheme parse_scheme(const json& j, const std::string& path) {
    const std::string s = as_string(j, path);
    if (s == "spectral") return PdeScheme::SemiImplicitSpectral;
    if (s == "explicit") return PdeScheme::ExplicitFlux;
    throw ConfigError(path + ": must be one of spectral, explicit");
}

} // namespace detail

struct PdeConfig {
    int grid = 0;
    double dt = 0.0;
    PdeScheme scheme = PdeScheme::SemiImplicitSpectral;
    double t_final = 0.0;
};

struct LabConfig {
    ChainSetup setup;
    ExperimentPlan plan;
    PdeConfig pde;
    bool has_plan = false;
    bool has_pde = false;
};

/// Validates and materializes a configuration document. The chain section is
/// always required; plan and pde sections are optional and their presence is
/// reported so each command can demand what it needs.
inline LabConfig parse_lab_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    LabConfig cfg;

    const json& chain = detail::require_key(doc, "chain", "chain");
    cfg.setup.n = detail::as_int(detail::require_key(chain, "chain.N", "N"), "chain.N");
    if (cfg.setup.n < 4) throw ConfigError("chain.N: must be at least 4");
    cfg.setup.gamma =
        detail::as_number(detail::require_key(chain, "chain.gamma", "gamma"), "chain.gamma");
    if (!(cfg.setup.gamma > 0.0)) throw ConfigError("chain.gamma: must be positive");

    cfg.setup.model = ChainModel::Unpinned;
    cfg.setup.nu = 0.0;
    if (const json* model = detail::find_key(doc, "model")) {
        const std::string kind =
            detail::as_string(detail::require_key(*model, "model.kind", "kind"), "model.kind");
        if (kind == "pinned") {
            cfg.setup.model = ChainModel::Pinned;
            cfg.setup.nu =
                detail::as_number(detail::require_key(*model, "model.nu", "nu"), "model.nu");
            if (!(cfg.setup.nu > 0.0)) throw ConfigError("model.nu: must be positive");
        } else if (kind != "unpinned") {
            throw ConfigError("model.kind: must be one of unpinned, pinned");
        }
    }

    cfg.setup.profile = default_profile();
    if (const json* prof = detail::find_key(doc, "profile")) {
        if (const json* b = detail::find_key(*prof, "beta"))
            cfg.setup.profile.beta = detail::parse_scalar_profile(*b, "profile.beta");
        if (const json* l = detail::find_key(*prof, "lambda"))
            cfg.setup.profile.lambda = detail::parse_scalar_profile(*l, "profile.lambda");
    }

    if (const json* plan = detail::find_key(doc, "plan")) {
        cfg.has_plan = true;
        cfg.plan.times = detail::as_number_array(
            detail::require_key(*plan, "plan.times", "times"), "plan.times");
        cfg.plan.ensemble = detail::as_int(
            detail::require_key(*plan, "plan.ensemble", "ensemble"), "plan.ensemble");
        if (const json* v = detail::find_key(*plan, "block_l"))
            cfg.plan.block_l = detail::as_int(*v, "plan.block_l");
        if (const json* v = detail::find_key(*plan, "cutoff_M"))
            cfg.plan.cutoff_m = detail::as_number(*v, "plan.cutoff_M");
        if (const json* v = detail::find_key(*plan, "engine"))
            cfg.plan.engine = detail::parse_engine(*v, "plan.engine");
        if (const json* v = detail::find_key(*plan, "max_events"))
            cfg.plan.max_events = detail::as_number(*v, "plan.max_events");
    }

    if (const json* pde = detail::find_key(doc, "pde")) {
        cfg.has_pde = true;
        cfg.pde.grid = detail::as_int(detail::require_key(*pde, "pde.grid", "grid"), "pde.grid");
        if (cfg.pde.grid < 4) throw ConfigError("pde.grid: must be at least 4");
        cfg.pde.dt = detail::as_number(detail::require_key(*pde, "pde.dt", "dt"), "pde.dt");
        if (!(cfg.pde.dt > 0.0)) throw ConfigError("pde.dt: must be positive");
        cfg.pde.t_final =
            detail::as_number(detail::require_key(*pde, "pde.t_final", "t_final"), "pde.t_final");
        if (!(cfg.pde.t_final >= 0.0)) throw ConfigError("pde.t_final: must be nonnegative");
        if (const json* v = detail::find_key(*pde, "scheme"))
            cfg.pde.scheme = detail::parse_scheme(*v, "pde.scheme");
    }

    return cfg;
}

inline LabConfig load_lab_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_lab_config(doc);
}

} // namespace flipchain
