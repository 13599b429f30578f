#pragma once

#include <string_view>
#include <vector>

#include "qkd/channel_model.hpp"
#include "qkd/fluctuation.hpp"
#include "qkd/photon_source.hpp"
#include "qkd/yield_estimator.hpp"

namespace qkd {

// Binary Shannon entropy on [0, 1], 0 at both endpoints. Throws outside.
double binary_entropy(double x);

enum class RateMethod {
    this_work,       // joint worst case over the shared H
    joint_separate,  // joint constraints, yield and error worst-cased separately
    independent      // per-source boxes only, everything worst-cased separately
};

const char* to_string(RateMethod m);
RateMethod rate_method_from_string(std::string_view name);

struct KeyRateConfig {
    int grid_points = 201;      // H grid including both interval endpoints
    double kappa_s = 1.0;       // yield substitution factor
    double kappa_e = 1.0;       // error substitution factor
    double refine_rel_tol = 1e-6;
    int threads = 0;
};

struct TracePoint {
    double h;
    double s11;
    double e11;
    double rate;
};

struct ClampFlags {
    bool s11_infeasible = false;
    bool s11_clamped = false;
    bool e11_clamped_low = false;
    bool e11_clamped_high = false;
    bool delta_clamped = false;
};

struct KeyRateResult {
    double rate_per_pair = 0.0;  // max(0, raw_rate)
    double raw_rate = 0.0;       // worst trace value, possibly negative
    double h_star = 0.0;
    double s11_at_star = 0.0;
    double e11_at_star = 0.0;
    HInterval interval;
    std::vector<TracePoint> trace;
    FailureLedger ledger;
    double kappa_s = 1.0, kappa_e = 1.0;
    ClampFlags flags;
};

// Key rate functional at one H value (raw, not clamped at zero).
double rate_at_h(const ObservedStats& stats, const SourceSpec& spec, const ChannelParams& params,
                 const FluctuationPolicy& policy, double h_value, double kappa_s = 1.0,
                 double kappa_e = 1.0);

// Worst case of the rate functional over the H interval: dense grid with a
// golden-section refinement around the grid minimum.
KeyRateResult worst_case_rate(const ObservedStats& stats, const SourceSpec& spec,
                              const ChannelParams& params, const FluctuationPolicy& policy,
                              const KeyRateConfig& cfg = {});

// Reference single-thread grid evaluation, for validating the parallel path.
KeyRateResult worst_case_rate_serial(const ObservedStats& stats, const SourceSpec& spec,
                                     const ChannelParams& params, const FluctuationPolicy& policy,
                                     KeyRateConfig cfg = {});

// Reconstructions of the comparison methods: fluctuations decoupled from the
// shared H (independent additionally drops the joint constraints).
KeyRateResult baseline_rate(const ObservedStats& stats, const SourceSpec& spec,
                            const ChannelParams& params, const FluctuationPolicy& policy,
                            RateMethod method, const KeyRateConfig& cfg = {});

// Dispatch on method; this_work routes to worst_case_rate.
KeyRateResult evaluate_rate(const ObservedStats& stats, const SourceSpec& spec,
                            const ChannelParams& params, const FluctuationPolicy& policy,
                            RateMethod method, const KeyRateConfig& cfg = {});

}  // namespace qkd
