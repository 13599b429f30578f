#include "qkd/json_io.hpp"

#include <cmath>
#include <fstream>

#include "qkd/errors.hpp"
#include "qkd/simplex.hpp"
#include "qkd/version.hpp"

namespace qkd {

using nlohmann::json;

namespace {

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw ConfigError(std::string("missing or non-numeric field: ") + key);
    return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("non-numeric field: ") + key);
    return j[key].get<double>();
}

}  // namespace

json to_json(const SourceSpec& spec) {
    return {{"mu_x", spec.mu_x}, {"mu_y", spec.mu_y}, {"mu_z", spec.mu_z},
            {"p_x", spec.p_x},   {"p_y", spec.p_y},   {"p_z", spec.p_z}};
}

SourceSpec source_spec_from_json(const json& j) {
    SourceSpec spec;
    spec.mu_x = require_number(j, "mu_x");
    spec.mu_y = require_number(j, "mu_y");
    spec.mu_z = require_number(j, "mu_z");
    spec.p_x = require_number(j, "p_x");
    spec.p_y = require_number(j, "p_y");
    spec.p_z = require_number(j, "p_z");
    spec.cutoff = static_cast<int>(number_or(j, "cutoff", 20));
    return spec;
}

json to_json(const ChannelParams& p) {
    return {{"p_d", p.p_d},
            {"eta_d", p.eta_d},
            {"e_d", p.e_d},
            {"e0", p.e0},
            {"f", p.f},
            {"alpha_db_per_km", p.alpha_db_per_km},
            {"distance_km", p.distance_km}};
}

ChannelParams channel_params_from_json(const json& j) {
    ChannelParams p;
    p.p_d = require_number(j, "p_d");
    p.eta_d = require_number(j, "eta_d");
    p.e_d = require_number(j, "e_d");
    p.e0 = number_or(j, "e0", 0.5);
    p.f = number_or(j, "f", 1.16);
    p.alpha_db_per_km = number_or(j, "alpha_db_per_km", 0.2);
    p.distance_km = number_or(j, "distance_km", 0.0);
    return p;
}

json to_json(const FluctuationPolicy& policy) {
    switch (policy.kind()) {
        case FluctuationPolicy::Kind::exact: return {{"policy", "exact"}};
        case FluctuationPolicy::Kind::normal:
            return {{"policy", "normal"}, {"gamma", policy.gamma()}};
        case FluctuationPolicy::Kind::chernoff:
            return {{"policy", "chernoff"}, {"epsilon", policy.epsilon()}};
    }
    throw NumericError("unknown policy kind");
}

FluctuationPolicy policy_from_json(const json& j) {
    if (j.is_string()) return policy_from_string(j.get<std::string>());
    std::string kind = j.value("policy", "");
    if (kind == "exact") return FluctuationPolicy::exact();
    if (kind == "normal") return FluctuationPolicy::normal(require_number(j, "gamma"));
    if (kind == "chernoff") return FluctuationPolicy::chernoff(require_number(j, "epsilon"));
    throw ConfigError("policy must be exact, normal or chernoff");
}

FluctuationPolicy policy_from_string(const std::string& text) {
    if (text == "exact") return FluctuationPolicy::exact();
    auto colon = text.find(':');
    if (colon != std::string::npos) {
        std::string kind = text.substr(0, colon);
        double value = 0.0;
        try {
            value = std::stod(text.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad policy parameter in '" + text + "'");
        }
        if (kind == "normal") return FluctuationPolicy::normal(value);
        if (kind == "chernoff") return FluctuationPolicy::chernoff(value);
    }
    throw ConfigError("bad policy string '" + text + "' (want normal:G, chernoff:E or exact)");
}

json to_json(const ObservedStats& stats) {
    json sources = json::object();
    for (PairSource s : kTrackedSources) {
        const SourceTally& t = stats.at(s);
        json entry;
        entry["N"] = t.pairs;
        if (stats.mode == SimMode::sampled) {
            entry["k"] = static_cast<std::int64_t>(t.detections);
            entry["k_err"] = static_cast<std::int64_t>(t.errors);
        } else {
            entry["k"] = t.detections;
            entry["k_err"] = t.errors;
        }
        sources[to_string(s)] = entry;
    }
    return {{"mode", stats.mode == SimMode::sampled ? "sampled" : "expected"},
            {"sources", sources}};
}

ObservedStats observed_stats_from_json(const json& j) {
    if (!j.contains("sources") || !j["sources"].is_object())
        throw ConfigError("stats document lacks a sources object");
    ObservedStats stats;
    stats.mode = j.value("mode", "expected") == "sampled" ? SimMode::sampled : SimMode::expected;
    for (PairSource s : kTrackedSources) {
        const char* name = to_string(s);
        if (!j["sources"].contains(name))
            throw ConfigError(std::string("stats document missing source ") + name);
        const json& e = j["sources"][name];
        SourceTally t;
        t.pairs = static_cast<std::int64_t>(require_number(e, "N"));
        t.detections = require_number(e, "k");
        t.errors = require_number(e, "k_err");
        stats.at(s) = t;
    }
    stats.validate();
    return stats;
}

json to_json(const KeyRateResult& r, bool include_trace) {
    json ledger = json::array();
    for (const auto& e : r.ledger.entries)
        ledger.push_back({{"bound", e.name}, {"failure_probability", e.probability}});
    json out{{"rate_per_pair", r.rate_per_pair},
             {"raw_rate", r.raw_rate},
             {"h_star", r.h_star},
             {"s11", r.s11_at_star},
             {"e11", r.e11_at_star},
             {"interval", {{"h", r.interval.h}, {"delta", r.interval.delta},
                           {"lo", r.interval.lo()}, {"hi", r.interval.hi()}}},
             {"kappa_s", r.kappa_s},
             {"kappa_e", r.kappa_e},
             {"ledger_total", r.ledger.total()},
             {"ledger", ledger},
             {"flags",
              {{"s11_infeasible", r.flags.s11_infeasible},
               {"s11_clamped", r.flags.s11_clamped},
               {"e11_clamped_low", r.flags.e11_clamped_low},
               {"e11_clamped_high", r.flags.e11_clamped_high},
               {"delta_clamped", r.flags.delta_clamped}}}};
    if (include_trace) {
        json trace = json::array();
        for (const auto& tp : r.trace)
            trace.push_back({{"h", tp.h}, {"s11", tp.s11}, {"e11", tp.e11}, {"rate", tp.rate}});
        out["trace"] = trace;
    }
    return out;
}

json to_json(const ScanRow& r) {
    return {{"distance_km", r.distance_km},
            {"n_total", r.n_total},
            {"method", to_string(r.method)},
            {"rate_per_pair", r.rate_per_pair},
            {"bits_per_second", r.bits_per_second},
            {"source", to_json(r.spec)},
            {"h_star", r.h_star},
            {"s11", r.s11},
            {"e11", r.e11},
            {"ledger_total", r.ledger_total}};
}

json lp_audit_json(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                   double h_value) {
    lp::Problem p = s11_lp_problem(constraints, coeff, h_value);
    lp::Solution sol = lp::solve(p);
    json vars = json::array();
    for (int i = 0; i < p.num_vars(); ++i) {
        json v{{"source", to_string(kEstimationSources[static_cast<std::size_t>(i)])},
               {"lower", p.lower[static_cast<std::size_t>(i)]},
               {"upper", p.upper[static_cast<std::size_t>(i)]},
               {"objective", p.objective[static_cast<std::size_t>(i)]}};
        if (sol.status == lp::Status::optimal) v["value"] = sol.x[static_cast<std::size_t>(i)];
        vars.push_back(v);
    }
    json rows = json::array();
    for (const auto& row : p.rows) {
        const char* rel = row.rel == lp::Relation::le ? "<="
                          : row.rel == lp::Relation::ge ? ">="
                                                        : "==";
        rows.push_back({{"coeff", row.coeff}, {"relation", rel}, {"rhs", row.rhs}});
    }
    json out{{"h", h_value},
             {"offset", p.offset},
             {"denominator", coeff.denominator},
             {"variables", vars},
             {"rows", rows},
             {"status", sol.status == lp::Status::optimal     ? "optimal"
                        : sol.status == lp::Status::infeasible ? "infeasible"
                                                               : "iteration_limit"}};
    if (sol.status == lp::Status::optimal) {
        out["objective_value"] = sol.value;
        out["s11"] = sol.value / coeff.denominator;
        out["active_rows"] = sol.active_rows;
        out["iterations"] = sol.iterations;
    }
    return out;
}

std::string config_digest(const json& config) {
    std::string dump = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

KeyRateConfig RunConfig::keyrate_config() const {
    KeyRateConfig cfg;
    cfg.grid_points = grid_points;
    cfg.kappa_s = kappa_s;
    cfg.kappa_e = kappa_e;
    cfg.threads = threads;
    return cfg;
}

ChannelParams RunConfig::params_at(double distance_km) const {
    ChannelParams p = params;
    p.distance_km = distance_km;
    return p;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.raw = j;

    if (j.contains("device")) {
        const json& d = j["device"];
        if (d.is_string()) {
            std::string line = d.get<std::string>();
            if (line.size() != 1) throw ConfigError("device line must be a, b or c");
            cfg.params = ChannelParams::preset(line[0]);
        } else if (d.is_object()) {
            cfg.params = channel_params_from_json(d);
        } else {
            throw ConfigError("device must be a line name or a parameter object");
        }
    }
    if (j.contains("alpha_db_per_km")) cfg.params.alpha_db_per_km = require_number(j, "alpha_db_per_km");

    if (j.contains("distance_km")) {
        cfg.distances_km = {require_number(j, "distance_km")};
    } else if (j.contains("distances")) {
        const json& d = j["distances"];
        if (d.is_array()) {
            for (const auto& v : d) cfg.distances_km.push_back(v.get<double>());
        } else if (d.is_object()) {
            double lo = require_number(d, "min"), hi = require_number(d, "max"),
                   step = require_number(d, "step");
            if (step <= 0.0 || hi < lo) throw ConfigError("empty distance range");
            for (double x = lo; x <= hi + 1e-9; x += step) cfg.distances_km.push_back(x);
        }
    }
    if (!cfg.distances_km.empty()) cfg.params.distance_km = cfg.distances_km.front();

    if (j.contains("source")) {
        const json& s = j["source"];
        if (s.is_string()) {
            if (s.get<std::string>() != "optimize")
                throw ConfigError("source must be a spec object or \"optimize\"");
        } else if (s.is_object()) {
            cfg.source = source_spec_from_json(s);
        } else {
            throw ConfigError("source must be a spec object or \"optimize\"");
        }
    }
    if (j.contains("policy")) cfg.policy = policy_from_json(j["policy"]);
    if (j.contains("n_total")) {
        double nt = require_number(j, "n_total");
        if (nt < 1.0) throw ConfigError("n_total must be >= 1");
        cfg.n_total = static_cast<std::int64_t>(std::llround(nt));
    }
    cfg.repetition_rate_hz = number_or(j, "repetition_rate_hz", 1e9);
    cfg.kappa_s = number_or(j, "kappa_s", 1.0);
    cfg.kappa_e = number_or(j, "kappa_e", 1.0);
    cfg.grid_points = static_cast<int>(number_or(j, "grid_points", 201));
    if (cfg.grid_points < 3) throw ConfigError("grid_points must be >= 3");
    if (j.contains("mode")) {
        std::string m = j["mode"].get<std::string>();
        if (m == "expected") cfg.mode = SimMode::expected;
        else if (m == "sampled") cfg.mode = SimMode::sampled;
        else throw ConfigError("mode must be expected or sampled");
    }
    cfg.seed = static_cast<std::uint64_t>(number_or(j, "seed", 1));
    cfg.threads = static_cast<int>(number_or(j, "threads", 0));
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : j["methods"])
            cfg.methods.push_back(rate_method_from_string(m.get<std::string>()));
        if (cfg.methods.empty()) throw ConfigError("methods list is empty");
    }
    if (j.contains("search")) {
        const json& s = j["search"];
        cfg.search.starts = static_cast<int>(number_or(s, "starts", 16));
        cfg.search.max_iterations = static_cast<int>(number_or(s, "max_iterations", 400));
        cfg.search.tolerance = number_or(s, "tolerance", 1e-3);
    }
    cfg.search.seed = cfg.seed;
    cfg.search.threads = cfg.threads;
    if (j.contains("out")) cfg.out_path = j["out"].get<std::string>();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace qkd
