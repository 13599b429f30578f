#include "qkd/photon_source.hpp"

#include <cmath>
#include <sstream>

#include "qkd/errors.hpp"

namespace qkd {

namespace {

constexpr const char* kSourceNames[8] = {"oo", "ox", "xo", "oy", "yo", "xx", "yy", "zz"};

Intensity alice_of(PairSource s) {
    switch (s) {
        case PairSource::oo:
        case PairSource::ox:
        case PairSource::oy: return Intensity::vacuum;
        case PairSource::xo:
        case PairSource::xx: return Intensity::x;
        case PairSource::yo:
        case PairSource::yy: return Intensity::y;
        case PairSource::zz: return Intensity::z;
    }
    throw ConfigError("unknown pair source");
}

Intensity bob_of(PairSource s) {
    switch (s) {
        case PairSource::oo:
        case PairSource::xo:
        case PairSource::yo: return Intensity::vacuum;
        case PairSource::ox:
        case PairSource::xx: return Intensity::x;
        case PairSource::oy:
        case PairSource::yy: return Intensity::y;
        case PairSource::zz: return Intensity::z;
    }
    throw ConfigError("unknown pair source");
}

}  // namespace

const char* to_string(PairSource s) { return kSourceNames[static_cast<int>(s)]; }

PairSource pair_source_from_string(std::string_view name) {
    for (int i = 0; i < 8; ++i)
        if (name == kSourceNames[i]) return static_cast<PairSource>(i);
    throw ConfigError("unknown pair source name: " + std::string(name));
}

double SourceSpec::intensity(Intensity i) const {
    switch (i) {
        case Intensity::vacuum: return 0.0;
        case Intensity::x: return mu_x;
        case Intensity::y: return mu_y;
        case Intensity::z: return mu_z;
    }
    throw ConfigError("unknown intensity");
}

double SourceSpec::prob(Intensity i) const {
    switch (i) {
        case Intensity::vacuum: return p_o();
        case Intensity::x: return p_x;
        case Intensity::y: return p_y;
        case Intensity::z: return p_z;
    }
    throw ConfigError("unknown intensity");
}

std::pair<double, double> SourceSpec::pair_intensities(PairSource s) const {
    return {intensity(alice_of(s)), intensity(bob_of(s))};
}

double SourceSpec::pair_prob(PairSource s) const {
    return prob(alice_of(s)) * prob(bob_of(s));
}

PhotonDistribution poisson_coefficients(double mu, int cutoff) {
    if (mu < 0.0) throw std::domain_error("poisson_coefficients: negative intensity");
    if (cutoff < 1) throw std::domain_error("poisson_coefficients: cutoff must be >= 1");
    PhotonDistribution dist;
    dist.coefficients.resize(static_cast<std::size_t>(cutoff) + 1);
    double c = std::exp(-mu);
    double sum = 0.0;
    for (int k = 0; k <= cutoff; ++k) {
        dist.coefficients[static_cast<std::size_t>(k)] = c;
        sum += c;
        c *= mu / (k + 1);
    }
    dist.tail_mass = sum >= 1.0 ? 0.0 : 1.0 - sum;
    return dist;
}

std::map<PairSource, std::int64_t> pair_counts(const SourceSpec& spec, std::int64_t n_total) {
    if (n_total < 1) throw ConfigError("pair_counts: n_total must be >= 1");
    std::map<PairSource, std::int64_t> counts;
    for (PairSource s : kTrackedSources) {
        auto n = static_cast<std::int64_t>(
            std::llround(static_cast<double>(n_total) * spec.pair_prob(s)));
        if (n < 1)
            throw ConfigError(std::string("degenerate configuration: source ") + to_string(s) +
                              " receives no pulse pairs");
        counts[s] = n;
    }
    return counts;
}

std::vector<std::string> validate_spec(const SourceSpec& spec) {
    std::vector<std::string> issues;
    if (!(spec.mu_x > 0.0)) issues.push_back("mu_x must be positive");
    if (!(spec.mu_z > 0.0)) issues.push_back("mu_z must be positive");
    if (!(spec.mu_x < spec.mu_y)) issues.push_back("mu_x < mu_y required");
    for (auto [p, name] : {std::pair{spec.p_x, "p_x"}, {spec.p_y, "p_y"}, {spec.p_z, "p_z"}}) {
        if (!(p > 0.0 && p < 1.0))
            issues.push_back(std::string(name) + " must lie in (0, 1)");
    }
    if (spec.p_x + spec.p_y + spec.p_z > 1.0 + 1e-12)
        issues.push_back("p_x + p_y + p_z exceeds 1");
    if (spec.cutoff < 10) issues.push_back("cutoff must be >= 10");
    return issues;
}

void require_valid(const SourceSpec& spec) {
    auto issues = validate_spec(spec);
    if (issues.empty()) return;
    std::ostringstream os;
    os << "invalid source spec:";
    for (const auto& m : issues) os << " [" << m << "]";
    throw ConfigError(os.str());
}

}  // namespace qkd
