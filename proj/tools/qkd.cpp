// Batch front end: simulate observable statistics, evaluate key rates,
// optimize protocol parameters, and sweep distance or pulse count into
// CSV/JSON reports.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qkd/errors.hpp"
#include "qkd/json_io.hpp"
#include "qkd/version.hpp"

namespace {

using nlohmann::json;

struct CliOverrides {
    std::string config_path;
    std::string out_path;
    std::string stats_path;
    std::string policy;
    std::vector<std::string> methods;
    std::optional<double> distance;
    std::optional<double> d_min, d_max, d_step;
    std::optional<double> nt;
    std::vector<double> nt_list;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON run configuration");
    cmd->add_option("--out", o.out_path, "output path (base path for scans)");
    cmd->add_option("--policy", o.policy, "normal:GAMMA | chernoff:EPS | exact");
    cmd->add_option("--method", o.methods, "rate methods (this_work, joint_separate, independent)");
    cmd->add_option("--distance", o.distance, "distance in km");
    cmd->add_option("--nt", o.nt, "total pulse pairs");
    cmd->add_option("--seed", o.seed, "deterministic seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

qkd::RunConfig make_config(const CliOverrides& o) {
    qkd::RunConfig cfg;
    if (!o.config_path.empty()) {
        cfg = qkd::load_run_config(o.config_path);
    } else {
        cfg.raw = json::object();
    }
    if (!o.policy.empty()) cfg.policy = qkd::policy_from_string(o.policy);
    if (o.distance) cfg.distances_km = {*o.distance};
    if (o.d_min || o.d_max || o.d_step) {
        if (!(o.d_min && o.d_max && o.d_step))
            throw qkd::ConfigError("--dmin, --dmax and --dstep must be given together");
        cfg.distances_km.clear();
        if (*o.d_step <= 0.0 || *o.d_max < *o.d_min) throw qkd::ConfigError("empty distance range");
        for (double d = *o.d_min; d <= *o.d_max + 1e-9; d += *o.d_step)
            cfg.distances_km.push_back(d);
    }
    if (o.nt) cfg.n_total = static_cast<std::int64_t>(std::llround(*o.nt));
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.search.seed = *o.seed;
    }
    if (o.threads) {
        cfg.threads = *o.threads;
        cfg.search.threads = *o.threads;
    }
    if (!o.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : o.methods) cfg.methods.push_back(qkd::rate_method_from_string(m));
    }
    if (!o.out_path.empty()) cfg.out_path = o.out_path;
    // Overrides become part of the provenance digest.
    json& raw = cfg.raw;
    raw["cli"] = {{"policy", o.policy}, {"out", cfg.out_path}};
    if (o.distance) raw["cli"]["distance"] = *o.distance;
    if (o.nt) raw["cli"]["nt"] = *o.nt;
    if (o.seed) raw["cli"]["seed"] = *o.seed;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw qkd::ConfigError("cannot open output file: " + path);
    out << text;
}

void write_json(const std::string& path, json doc, const qkd::RunConfig& cfg) {
    doc["tool_version"] = qkd::kToolVersion;
    doc["config_digest"] = qkd::config_digest(cfg.raw);
    write_text(path, doc.dump(2) + "\n");
}

double require_single_distance(const qkd::RunConfig& cfg) {
    if (cfg.distances_km.size() != 1)
        throw qkd::ConfigError("this command needs exactly one distance");
    return cfg.distances_km.front();
}

const qkd::SourceSpec& require_source(const qkd::RunConfig& cfg) {
    if (!cfg.source) throw qkd::ConfigError("this command needs an explicit source spec");
    return *cfg.source;
}

int cmd_simulate(const CliOverrides& o) {
    qkd::RunConfig cfg = make_config(o);
    double distance = require_single_distance(cfg);
    const qkd::SourceSpec& spec = require_source(cfg);
    qkd::ObservedStats stats =
        qkd::simulate_observed(spec, cfg.params_at(distance), cfg.n_total, cfg.mode, cfg.seed);
    json doc = qkd::to_json(stats);
    doc["distance_km"] = distance;
    doc["n_total"] = cfg.n_total;
    doc["seed"] = cfg.seed;
    write_json(cfg.out_path, std::move(doc), cfg);
    return 0;
}

int cmd_keyrate(const CliOverrides& o) {
    qkd::RunConfig cfg = make_config(o);
    double distance = require_single_distance(cfg);
    const qkd::SourceSpec& spec = require_source(cfg);
    qkd::ObservedStats stats;
    if (!o.stats_path.empty()) {
        std::ifstream in(o.stats_path);
        if (!in) throw qkd::ConfigError("cannot open stats file: " + o.stats_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw qkd::ConfigError(std::string("stats parse error: ") + e.what());
        }
        stats = qkd::observed_stats_from_json(j);
    } else {
        stats = qkd::simulate_observed(spec, cfg.params_at(distance), cfg.n_total, cfg.mode,
                                       cfg.seed);
    }
    qkd::KeyRateResult res = qkd::evaluate_rate(stats, spec, cfg.params_at(distance), cfg.policy,
                                                cfg.methods.front(), cfg.keyrate_config());
    json doc = qkd::to_json(res);
    doc["method"] = qkd::to_string(cfg.methods.front());
    doc["distance_km"] = distance;
    doc["n_total"] = cfg.n_total;
    doc["bits_per_second"] = res.rate_per_pair * cfg.repetition_rate_hz;
    write_json(cfg.out_path, std::move(doc), cfg);
    std::fprintf(stderr, "rate_per_pair = %.6e\n", res.rate_per_pair);
    return 0;
}

int cmd_optimize(const CliOverrides& o) {
    qkd::RunConfig cfg = make_config(o);
    double distance = require_single_distance(cfg);
    qkd::OptimizationResult best = qkd::optimize(cfg.params_at(distance), cfg.n_total, cfg.policy,
                                                 cfg.search, cfg.methods.front(),
                                                 cfg.keyrate_config());
    json doc{{"distance_km", distance},
             {"n_total", cfg.n_total},
             {"method", qkd::to_string(cfg.methods.front())},
             {"source", qkd::to_json(best.best_spec)},
             {"result", qkd::to_json(best.best_result, false)},
             {"bits_per_second", best.best_result.rate_per_pair * cfg.repetition_rate_hz},
             {"evaluations", best.evaluations}};
    json starts = json::array();
    for (const auto& rec : best.history)
        starts.push_back({{"start", rec.start_index},
                          {"rate", rec.rate},
                          {"iterations", rec.iterations},
                          {"source", qkd::to_json(rec.spec)}});
    doc["starts"] = starts;
    write_json(cfg.out_path, std::move(doc), cfg);
    std::fprintf(stderr, "optimized rate_per_pair = %.6e\n", best.best_result.rate_per_pair);
    return 0;
}

int run_scan(const qkd::RunConfig& cfg, const std::vector<qkd::ScanRow>& rows) {
    std::string base = cfg.out_path.empty() ? std::string("scan") : cfg.out_path;
    std::string digest = qkd::config_digest(cfg.raw);
    std::string csv = "# tool_version=" + std::string(qkd::kToolVersion) +
                      " config_digest=" + digest + "\n" + qkd::scan_csv(rows);
    write_text(base + ".csv", csv);
    json jrows = json::array();
    for (const auto& r : rows) jrows.push_back(qkd::to_json(r));
    write_json(base + ".json", json{{"rows", jrows}}, cfg);
    return 0;
}

int cmd_scan(const CliOverrides& o, bool force_all_methods) {
    qkd::RunConfig cfg = make_config(o);
    if (force_all_methods)
        cfg.methods = {qkd::RateMethod::this_work, qkd::RateMethod::joint_separate,
                       qkd::RateMethod::independent};
    if (cfg.distances_km.empty()) throw qkd::ConfigError("no distances configured");
    double d_min = cfg.distances_km.front(), d_max = cfg.distances_km.back();
    double step = cfg.distances_km.size() > 1
                      ? cfg.distances_km[1] - cfg.distances_km[0]
                      : 1.0;
    auto rows = qkd::scan_distance(cfg.params, d_min, d_max, step, cfg.n_total, cfg.policy,
                                   cfg.methods, cfg.search, cfg.keyrate_config(),
                                   cfg.repetition_rate_hz);
    return run_scan(cfg, rows);
}

int cmd_ntscan(const CliOverrides& o) {
    qkd::RunConfig cfg = make_config(o);
    double distance = require_single_distance(cfg);
    std::vector<std::int64_t> nts;
    if (!o.nt_list.empty()) {
        for (double v : o.nt_list) nts.push_back(static_cast<std::int64_t>(std::llround(v)));
    } else if (cfg.raw.contains("nt_list")) {
        for (const auto& v : cfg.raw["nt_list"])
            nts.push_back(static_cast<std::int64_t>(std::llround(v.get<double>())));
    }
    if (nts.empty()) throw qkd::ConfigError("ntscan needs --nt-list or nt_list in the config");
    auto rows = qkd::scan_ntotal(cfg.params, distance, nts, cfg.policy, cfg.methods, cfg.search,
                                 cfg.keyrate_config(), cfg.repetition_rate_hz);
    return run_scan(cfg, rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-key rate analysis for 4-intensity two-arm decoy protocols"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qkd::kToolVersion);

    CliOverrides o;
    CLI::App* simulate = app.add_subcommand("simulate", "write observed statistics for a spec");
    add_common(simulate, o);
    CLI::App* keyrate = app.add_subcommand("keyrate", "evaluate the key rate for a spec");
    add_common(keyrate, o);
    keyrate->add_option("--stats", o.stats_path, "statistics JSON produced by simulate");
    CLI::App* optimize = app.add_subcommand("optimize", "search the six protocol parameters");
    add_common(optimize, o);
    CLI::App* scan = app.add_subcommand("scan", "optimized rate versus distance");
    add_common(scan, o);
    scan->add_option("--dmin", o.d_min, "first distance (km)");
    scan->add_option("--dmax", o.d_max, "last distance (km)");
    scan->add_option("--dstep", o.d_step, "distance step (km)");
    CLI::App* ntscan = app.add_subcommand("ntscan", "optimized rate versus pulse count");
    add_common(ntscan, o);
    ntscan->add_option("--nt-list", o.nt_list, "pulse-pair counts to scan");
    CLI::App* compare = app.add_subcommand("compare", "all three methods side by side");
    add_common(compare, o);
    compare->add_option("--dmin", o.d_min, "first distance (km)");
    compare->add_option("--dmax", o.d_max, "last distance (km)");
    compare->add_option("--dstep", o.d_step, "distance step (km)");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) return cmd_simulate(o);
        if (keyrate->parsed()) return cmd_keyrate(o);
        if (optimize->parsed()) return cmd_optimize(o);
        if (scan->parsed()) return cmd_scan(o, false);
        if (ntscan->parsed()) return cmd_ntscan(o);
        if (compare->parsed()) return cmd_scan(o, true);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << json{{"error", {{"type", "cli"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    } catch (const qkd::ConfigError& e) {
        std::cerr << json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    } catch (const qkd::NumericError& e) {
        std::cerr << json{{"error", {{"type", "numeric"}, {"message", e.what()}}}}.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump() << "\n";
        return 3;
    }
}
