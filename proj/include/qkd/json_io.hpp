#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkd/channel_model.hpp"
#include "qkd/fluctuation.hpp"
#include "qkd/keyrate_engine.hpp"
#include "qkd/param_optimizer.hpp"
#include "qkd/photon_source.hpp"
#include "qkd/yield_estimator.hpp"

namespace qkd {

nlohmann::json to_json(const SourceSpec& spec);
SourceSpec source_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ChannelParams& params);
ChannelParams channel_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FluctuationPolicy& policy);
FluctuationPolicy policy_from_json(const nlohmann::json& j);
// "normal:5.3", "chernoff:1e-10" or "exact"
FluctuationPolicy policy_from_string(const std::string& text);

nlohmann::json to_json(const ObservedStats& stats);
ObservedStats observed_stats_from_json(const nlohmann::json& j);

nlohmann::json to_json(const KeyRateResult& result, bool include_trace = true);
nlohmann::json to_json(const ScanRow& row);

// LP snapshot at one H: objective, bounds, joint rows, solution and the
// binding constraints, for offline audit.
nlohmann::json lp_audit_json(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                             double h_value);

// FNV-1a digest of a canonical (sorted-key, compact) JSON dump; embedded in
// every output file for provenance.
std::string config_digest(const nlohmann::json& config);

// Batch-run configuration shared by the CLI subcommands.
struct RunConfig {
    ChannelParams params;                // device line or custom fields
    std::optional<SourceSpec> source;    // explicit spec, or nullopt = "optimize"
    FluctuationPolicy policy = FluctuationPolicy::normal(5.3);
    std::int64_t n_total = 10'000'000'000LL;
    std::vector<double> distances_km;    // one or more points
    double repetition_rate_hz = 1e9;
    double kappa_s = 1.0, kappa_e = 1.0;
    int grid_points = 201;
    SimMode mode = SimMode::expected;
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<RateMethod> methods = {RateMethod::this_work};
    SearchConfig search;
    std::string out_path;

    nlohmann::json raw;  // the config document as parsed, for the digest

    KeyRateConfig keyrate_config() const;
    ChannelParams params_at(double distance_km) const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace qkd
