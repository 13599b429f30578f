#include "qkd/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qkd/errors.hpp"

namespace qkd {

namespace {

// I0(x) - 1 without the cancellation of subtracting 1 from the Bessel value;
// the gains need this difference to full relative precision at small x.
double i0m1(double x) {
    double t = x * x / 4.0;
    if (t == 0.0) return 0.0;
    if (x <= 3.0) {
        double term = t, sum = t;
        for (int k = 2; k < 80; ++k) {
            term *= t / (static_cast<double>(k) * k);
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    }
    return std::cyl_bessel_i(0.0, x) - 1.0;
}

// 1 - (1-p_d) e^{-I}: click probability of a threshold detector seeing mean
// intensity I, stable for tiny I.
double click_prob(double intensity, double p_d) {
    return p_d + (1.0 - p_d) * (-std::expm1(-intensity));
}

double no_click_prob(double intensity, double p_d) {
    return (1.0 - p_d) * std::exp(-intensity);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

ChannelParams ChannelParams::preset(char line) {
    ChannelParams p;
    switch (line) {
        case 'a': p.p_d = 6.02e-6; p.eta_d = 0.145; p.e_d = 0.015; break;
        case 'b': p.p_d = 1e-7;    p.eta_d = 0.40;  p.e_d = 0.015; break;
        case 'c': p.p_d = 1e-7;    p.eta_d = 0.40;  p.e_d = 0.01;  break;
        default: throw ConfigError(std::string("unknown device line '") + line + "'");
    }
    return p;
}

double arm_transmittance(const ChannelParams& params) {
    if (params.distance_km < 0.0) throw ConfigError("negative distance");
    return params.eta_d *
           std::pow(10.0, -params.alpha_db_per_km * (params.distance_km / 2.0) / 10.0);
}

// X-basis gain of a weak-coherent pulse pair. With lambda = eta*mu per arm,
// mu' = la + lb, x = sqrt(la lb)/2 and y = (1-p_d) e^{-mu'/4}:
//   Q  = 2 y^2 [ 1 + 2y^2 - 4 y I0(x) + I0(2x) ]
//   EQ = e0 Q - 2 (e0 - e_d) y^2 [ I0(2x) - 1 ]
// evaluated in the grouped form 2(1-y)^2 + (I0(2x)-1) - 4y(I0(x)-1) so the
// near-vacuum regime keeps full precision.
GainPair gain_x(double mu_a, double mu_b, double eta_a, double eta_b, const ChannelParams& params) {
    if (mu_a < 0.0 || mu_b < 0.0) throw std::domain_error("gain_x: negative intensity");
    double la = eta_a * mu_a, lb = eta_b * mu_b;
    double mup = la + lb;
    double x = std::sqrt(la * lb) / 2.0;
    double y = (1.0 - params.p_d) * std::exp(-mup / 4.0);
    double one_minus_y = params.p_d + (1.0 - params.p_d) * (-std::expm1(-mup / 4.0));
    double bracket = 2.0 * one_minus_y * one_minus_y + i0m1(2.0 * x) - 4.0 * y * i0m1(x);
    double q = 2.0 * y * y * bracket;
    double eq = params.e0 * q - 2.0 * (params.e0 - params.e_d) * y * y * i0m1(2.0 * x);
    eq = std::clamp(eq, 0.0, q);
    return {q, eq};
}

// Z-basis gain: correct coincidences interfere only through loss,
//   Q_C = 2 (1-p_d)^2 e^{-mu'/2} [1 - (1-p_d) e^{-la/2}] [1 - (1-p_d) e^{-lb/2}]
// while the error part is dark-count driven,
//   Q_E = 2 p_d (1-p_d)^2 e^{-mu'/2} [ I0(2x) - (1-p_d) e^{-mu'/2} ],
// and misalignment flips correct coincidences: EQ = e_d Q_C + (1-e_d) Q_E.
GainPair gain_z(double mu_a, double mu_b, double eta_a, double eta_b, const ChannelParams& params) {
    if (mu_a < 0.0 || mu_b < 0.0) throw std::domain_error("gain_z: negative intensity");
    double pd = params.p_d;
    double la = eta_a * mu_a, lb = eta_b * mu_b;
    double mup = la + lb;
    double x = std::sqrt(la * lb) / 2.0;
    double qc = 2.0 * (1.0 - pd) * (1.0 - pd) * std::exp(-mup / 2.0) * click_prob(la / 2.0, pd) *
                click_prob(lb / 2.0, pd);
    double qe = 2.0 * pd * (1.0 - pd) * (1.0 - pd) * std::exp(-mup / 2.0) *
                (i0m1(2.0 * x) + click_prob(mup / 2.0, pd));
    double q = qc + qe;
    double eq = params.e_d * qc + (1.0 - params.e_d) * qe;
    return {q, eq};
}

GainPair bsm_oracle_gain(double mu_a, double mu_b, double eta_a, double eta_b,
                         const ChannelParams& params, Basis basis, int phase_points) {
    if (phase_points < 64) throw ConfigError("bsm_oracle_gain: phase_points must be >= 64");
    const double pd = params.p_d;
    const double amp_a = std::sqrt(eta_a * mu_a);
    const double amp_b = std::sqrt(eta_b * mu_b);

    // Detector order 1H, 1V, 2H, 2V. Two-click acceptance: opposite ports
    // with opposite polarizations (one Bell outcome) or one port with both
    // polarizations (the other).
    static constexpr int kPsiMinus[2][2] = {{0, 3}, {1, 2}};
    static constexpr int kPsiPlus[2][2] = {{0, 1}, {2, 3}};

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    double pol[2][2];  // bit value -> (H, V) amplitude weights
    if (basis == Basis::X) {
        pol[0][0] = inv_sqrt2; pol[0][1] = inv_sqrt2;
        pol[1][0] = inv_sqrt2; pol[1][1] = -inv_sqrt2;
    } else {
        pol[0][0] = 1.0; pol[0][1] = 0.0;
        pol[1][0] = 0.0; pol[1][1] = 1.0;
    }

    double q_sum = 0.0, err_sum = 0.0;
    for (int bit_a = 0; bit_a < 2; ++bit_a) {
        for (int bit_b = 0; bit_b < 2; ++bit_b) {
            const double* u = pol[bit_a];
            const double* w = pol[bit_b];
            for (int p = 0; p < phase_points; ++p) {
                double phi = 2.0 * M_PI * p / phase_points;
                double cr = std::cos(phi), ci = std::sin(phi);
                double intensity[4], click[4], noclick[4];
                for (int s = 0; s < 2; ++s) {
                    double ar = amp_a * u[s] + amp_b * w[s] * cr;  // port 1
                    double ai = amp_b * w[s] * ci;
                    intensity[s] = 0.5 * (ar * ar + ai * ai);
                    double br = amp_a * u[s] - amp_b * w[s] * cr;  // port 2
                    double bi = -amp_b * w[s] * ci;
                    intensity[2 + s] = 0.5 * (br * br + bi * bi);
                }
                for (int d = 0; d < 4; ++d) {
                    click[d] = click_prob(intensity[d], pd);
                    noclick[d] = no_click_prob(intensity[d], pd);
                }
                auto pattern_prob = [&](const int* pat) {
                    double v = 1.0;
                    for (int d = 0; d < 4; ++d)
                        v *= (d == pat[0] || d == pat[1]) ? click[d] : noclick[d];
                    return v;
                };
                for (int i = 0; i < 2; ++i) {
                    double pm = pattern_prob(kPsiMinus[i]);
                    double pp = pattern_prob(kPsiPlus[i]);
                    q_sum += pm + pp;
                    bool equal_bits = bit_a == bit_b;
                    if (basis == Basis::X) {
                        if (equal_bits) err_sum += pm;   // opposite-port outcome heralds anticorrelation
                        else err_sum += pp;
                    } else {
                        if (equal_bits) err_sum += pm + pp;  // both outcomes herald anticorrelation
                    }
                }
            }
        }
    }
    double norm = 4.0 * phase_points;
    double q = q_sum / norm;
    double err0 = err_sum / norm;
    // Misalignment: each sifted bit flips with probability e_d.
    double eq = params.e_d * (q - err0) + (1.0 - params.e_d) * err0;
    return {q, std::clamp(eq, 0.0, q)};
}

double ObservedStats::yield(PairSource s) const {
    const SourceTally& t = at(s);
    return t.pairs > 0 ? t.detections / static_cast<double>(t.pairs) : 0.0;
}

double ObservedStats::error_yield(PairSource s) const {
    const SourceTally& t = at(s);
    return t.pairs > 0 ? t.errors / static_cast<double>(t.pairs) : 0.0;
}

double ObservedStats::e_zz() const {
    const SourceTally& t = at(PairSource::zz);
    if (t.detections <= 0.0) throw ConfigError("e_zz undefined: no zz detections");
    return t.errors / t.detections;
}

void ObservedStats::validate() const {
    for (PairSource s : kTrackedSources) {
        const SourceTally& t = at(s);
        if (t.pairs < 1) throw ConfigError(std::string("source ") + to_string(s) + " has no pairs");
        if (t.errors < 0.0 || t.detections < t.errors ||
            static_cast<double>(t.pairs) < t.detections)
            throw ConfigError(std::string("source ") + to_string(s) +
                              " violates 0 <= errors <= detections <= pairs");
    }
}

ObservedStats simulate_observed(const SourceSpec& spec, const ChannelParams& params,
                                std::int64_t n_total, SimMode mode, std::uint64_t seed) {
    require_valid(spec);
    auto counts = pair_counts(spec, n_total);
    double eta = arm_transmittance(params);

    ObservedStats stats;
    stats.mode = mode;
    for (PairSource s : kTrackedSources) {
        auto [mu_a, mu_b] = spec.pair_intensities(s);
        GainPair g = s == PairSource::zz ? gain_z(mu_a, mu_b, eta, eta, params)
                                         : gain_x(mu_a, mu_b, eta, eta, params);
        SourceTally tally;
        tally.pairs = counts.at(s);
        if (mode == SimMode::expected) {
            tally.detections = static_cast<double>(tally.pairs) * g.q;
            tally.errors = static_cast<double>(tally.pairs) * g.eq;
        } else {
            std::mt19937_64 rng(splitmix64(seed ^ (0x51aabbccULL + static_cast<std::uint64_t>(s))));
            std::binomial_distribution<std::int64_t> det(tally.pairs, g.q);
            auto k = det(rng);
            std::int64_t kerr = 0;
            if (k > 0 && g.q > 0.0) {
                std::binomial_distribution<std::int64_t> err(k, std::min(1.0, g.eq / g.q));
                kerr = err(rng);
            }
            tally.detections = static_cast<double>(k);
            tally.errors = static_cast<double>(kerr);
        }
        stats.at(s) = tally;
    }
    return stats;
}

}  // namespace qkd
