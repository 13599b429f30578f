#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkd/channel_model.hpp"
#include "qkd/fluctuation.hpp"
#include "qkd/keyrate_engine.hpp"
#include "qkd/photon_source.hpp"

namespace qkd {

struct SearchBounds {
    double mu_x_min = 1e-4, mu_x_max = 0.5;
    double mu_gap_min = 1e-3;  // mu_y >= mu_x + gap
    double mu_y_max = 1.0;
    double mu_z_min = 1e-3, mu_z_max = 1.0;
};

struct SearchConfig {
    int starts = 16;
    int max_iterations = 400;   // downhill-simplex iterations per start
    double tolerance = 1e-3;    // relative rate-change convergence
    SearchBounds bounds;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct StartRecord {
    int start_index = 0;
    double rate = 0.0;
    SourceSpec spec;
    int iterations = 0;
    std::int64_t evaluations = 0;
    std::vector<double> incumbents;  // best objective value after each iteration
};

struct OptimizationResult {
    SourceSpec best_spec;
    KeyRateResult best_result;
    std::vector<StartRecord> history;
    std::int64_t evaluations = 0;
};

// Multi-start derivative-free search over (mu_x, mu_y, mu_z, p_x, p_y, p_z)
// in a transformed unconstrained space; maximizes the method's key rate at
// fixed device, distance and pulse count. Deterministic in (seed).
OptimizationResult optimize(const ChannelParams& params, std::int64_t n_total,
                            const FluctuationPolicy& policy, const SearchConfig& search,
                            RateMethod method = RateMethod::this_work,
                            const KeyRateConfig& rate_cfg = {});

struct ScanRow {
    double distance_km = 0.0;
    std::int64_t n_total = 0;
    RateMethod method = RateMethod::this_work;
    double rate_per_pair = 0.0;
    double bits_per_second = 0.0;
    SourceSpec spec;
    double h_star = 0.0, s11 = 0.0, e11 = 0.0, ledger_total = 0.0;
};

// Independent optimization per distance and method, warm-started from the
// previous distance's optimum.
std::vector<ScanRow> scan_distance(const ChannelParams& base, double d_min, double d_max,
                                   double step, std::int64_t n_total,
                                   const FluctuationPolicy& policy,
                                   const std::vector<RateMethod>& methods,
                                   const SearchConfig& search, const KeyRateConfig& rate_cfg = {},
                                   double repetition_rate_hz = 1e9);

// Same sweep over the total pulse-pair count at a fixed distance.
std::vector<ScanRow> scan_ntotal(const ChannelParams& base, double distance_km,
                                 const std::vector<std::int64_t>& nt_list,
                                 const FluctuationPolicy& policy,
                                 const std::vector<RateMethod>& methods,
                                 const SearchConfig& search, const KeyRateConfig& rate_cfg = {},
                                 double repetition_rate_hz = 1e9);

// CSV with the fixed column set used by the scan commands.
std::string scan_csv(const std::vector<ScanRow>& rows);

}  // namespace qkd
