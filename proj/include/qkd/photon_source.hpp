#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qkd {

// One party's intensity settings: vacuum, two decoy intensities in the X
// basis, and the signal intensity in the Z basis.
enum class Intensity : int { vacuum = 0, x = 1, y = 2, z = 3 };

// Two-pulse sources tracked by the protocol. The first seven (Alice index
// runs first) feed the single-photon estimation; zz is the key source.
enum class PairSource : int { oo = 0, ox, xo, oy, yo, xx, yy, zz };

inline constexpr std::array<PairSource, 7> kEstimationSources = {
    PairSource::oo, PairSource::ox, PairSource::xo, PairSource::oy,
    PairSource::yo, PairSource::xx, PairSource::yy};

inline constexpr std::array<PairSource, 8> kTrackedSources = {
    PairSource::oo, PairSource::ox, PairSource::xo, PairSource::oy,
    PairSource::yo, PairSource::xx, PairSource::yy, PairSource::zz};

const char* to_string(PairSource s);
PairSource pair_source_from_string(std::string_view name);

// Symmetric source configuration (Bob mirrors Alice).
struct SourceSpec {
    double mu_x = 0.1;
    double mu_y = 0.3;
    double mu_z = 0.3;
    double p_x = 0.25;
    double p_y = 0.25;
    double p_z = 0.25;
    int cutoff = 20;  // photon-number truncation for series coefficients

    double p_o() const { return 1.0 - p_x - p_y - p_z; }
    double intensity(Intensity i) const;
    double prob(Intensity i) const;
    std::pair<double, double> pair_intensities(PairSource s) const;
    double pair_prob(PairSource s) const;
};

// Photon-number coefficients c_0..c_cutoff of a source plus the truncated
// remainder. Invariant: sum(coefficients) + tail_mass == 1.
struct PhotonDistribution {
    std::vector<double> coefficients;
    double tail_mass = 0.0;
};

// Poisson photon-number statistics of a phase-randomized coherent pulse of
// the given intensity. Throws on negative mu.
PhotonDistribution poisson_coefficients(double mu, int cutoff);

// Deterministic allocation of n_total pulse pairs to the tracked sources:
// N_lr = round(n_total * p_l * p_r). Throws ConfigError naming the first
// source whose expected count rounds to zero.
std::map<PairSource, std::int64_t> pair_counts(const SourceSpec& spec, std::int64_t n_total);

// All violated invariants, empty when the spec is usable. Nothing is clamped.
std::vector<std::string> validate_spec(const SourceSpec& spec);

// Throws ConfigError aggregating every violation.
void require_valid(const SourceSpec& spec);

}  // namespace qkd
