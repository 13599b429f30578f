#pragma once

#include <array>
#include <cstdint>

#include "qkd/photon_source.hpp"

namespace qkd {

// Detector and fiber constants shared by both arms.
struct ChannelParams {
    double p_d = 6.02e-6;       // dark count probability per detector per gate
    double eta_d = 0.145;       // detector efficiency
    double e_d = 0.015;         // misalignment error probability
    double e0 = 0.5;            // vacuum error rate
    double f = 1.16;            // error-correction inefficiency
    double alpha_db_per_km = 0.2;
    double distance_km = 0.0;   // total Alice-Bob distance; relay at midpoint

    // Built-in detector sets 'a', 'b', 'c'. Throws ConfigError otherwise.
    static ChannelParams preset(char line);
};

// Overall transmittance of one arm (source to relay detector).
double arm_transmittance(const ChannelParams& params);

struct GainPair {
    double q;   // probability of a heralded event per pulse pair
    double eq;  // probability of a heralded event carrying a sifted-bit error
};

// Heralded-event and error rates for a pulse pair sent in the X basis
// (both decoy/vacuum sources) or the Z basis, as closed forms in the
// received intensities. eta_a/eta_b are per-arm transmittances.
GainPair gain_x(double mu_a, double mu_b, double eta_a, double eta_b, const ChannelParams& params);
GainPair gain_z(double mu_a, double mu_b, double eta_a, double eta_b, const ChannelParams& params);

enum class Basis { X, Z };

// Independent check of gain_x/gain_z: averages four threshold detectors
// behind a 50:50 beam splitter and polarizing splitters over the uniform
// relative phase (periodic trapezoid rule) and over the four bit-value
// combinations. Misalignment enters as a bit flip with probability e_d on
// the outcome assignment, the convention the closed forms encode.
GainPair bsm_oracle_gain(double mu_a, double mu_b, double eta_a, double eta_b,
                         const ChannelParams& params, Basis basis, int phase_points);

enum class SimMode { expected, sampled };

struct SourceTally {
    std::int64_t pairs = 0;  // N_lr
    double detections = 0;   // k_lr  (real in expected mode, integral in sampled mode)
    double errors = 0;       // k~_lr
};

// Per-source counts for one run, with derived yields.
struct ObservedStats {
    std::array<SourceTally, 8> sources{};  // indexed by PairSource
    SimMode mode = SimMode::expected;

    const SourceTally& at(PairSource s) const { return sources[static_cast<int>(s)]; }
    SourceTally& at(PairSource s) { return sources[static_cast<int>(s)]; }
    double yield(PairSource s) const;        // S_lr = k/N
    double error_yield(PairSource s) const;  // T_lr = k~/N
    double e_zz() const;                     // k~_zz / k_zz

    // Throws ConfigError unless 0 <= errors <= detections <= pairs everywhere.
    void validate() const;
};

// Expected (or binomially sampled) statistics for every tracked source at the
// configured distance. X-basis gains apply to all estimation sources, the
// Z-basis gain to zz. Sampled mode is deterministic in (seed).
ObservedStats simulate_observed(const SourceSpec& spec, const ChannelParams& params,
                                std::int64_t n_total, SimMode mode, std::uint64_t seed = 0);

}  // namespace qkd
