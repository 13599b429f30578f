#include "qkd/fluctuation.hpp"

#include <cmath>
#include <random>

#include "qkd/errors.hpp"
#include "qkd/parallel.hpp"

namespace qkd {

namespace {

// Acklam's rational approximation of the standard normal quantile, polished
// with one Halley step on erfc. Accurate to well below 1e-9 relative.
double probit(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement against the exact CDF.
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

// Chernoff upper limit: smallest m >= k with (m-k)^2/(2m) = log(1/eps),
// the lower-tail exponent at count k under mean m.
double chernoff_upper(double k, double log_inv_eps) {
    const double L = log_inv_eps;
    auto g = [&](double m) { return (m - k) * (m - k) / (2.0 * m) - L; };
    double lo = k > 0 ? k : 1e-300;
    double hi = k + 2.0 * (L + std::sqrt(L * L + 2.0 * k * L)) + 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (g(mid) >= 0.0 ? hi : lo) = mid;
        if (hi - lo <= 1e-12 * hi) return 0.5 * (lo + hi);
    }
    throw NumericError("chernoff_upper: bisection did not converge");
}

// Chernoff lower limit: largest m <= k with (k-m)^2/(k+m) = log(1/eps), the
// upper-tail exponent. No solution (k <= log(1/eps)) collapses to zero.
double chernoff_lower(double k, double log_inv_eps) {
    const double L = log_inv_eps;
    if (k <= L) return 0.0;
    auto f = [&](double m) { return (k - m) * (k - m) / (k + m) - L; };
    double lo = 1e-300, hi = k;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (f(mid) >= 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-12 * hi) return 0.5 * (lo + hi);
    }
    throw NumericError("chernoff_lower: bisection did not converge");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One coverage trial: realize a Bernoulli population, draw a uniform random
// subset without replacement, and test whether the subset count's range
// brackets the realized population rate.
bool trial_violates(std::int64_t n_population, std::int64_t n_subset, double true_rate,
                    const FluctuationPolicy& policy, std::uint64_t trial_seed) {
    std::mt19937_64 rng(trial_seed);
    std::binomial_distribution<std::int64_t> pop(n_population, true_rate);
    std::int64_t successes = pop(rng);
    // sequential hypergeometric draw of the subset's success count
    std::int64_t remaining = successes;
    std::int64_t subset_hits = 0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::int64_t i = 0; i < n_subset; ++i) {
        double p = static_cast<double>(remaining) / static_cast<double>(n_population - i);
        if (unif(rng) < p) {
            ++subset_hits;
            --remaining;
        }
    }
    MeanRange r = policy.mean_range(static_cast<double>(subset_hits));
    double expected_subset_count = static_cast<double>(n_subset) * static_cast<double>(successes) /
                                   static_cast<double>(n_population);
    return expected_subset_count < r.lower || expected_subset_count > r.upper;
}

}  // namespace

FluctuationPolicy FluctuationPolicy::exact() { return {Kind::exact, 0.0, 0.0}; }

FluctuationPolicy FluctuationPolicy::normal(double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("normal policy requires gamma > 0");
    return {Kind::normal, gamma, epsilon_for_gamma(gamma)};
}

FluctuationPolicy FluctuationPolicy::chernoff(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("chernoff policy requires epsilon in (0,1)");
    return {Kind::chernoff, 0.0, epsilon};
}

double FluctuationPolicy::one_sided_failure() const {
    return kind_ == Kind::exact ? 0.0 : epsilon_;
}

MeanRange FluctuationPolicy::mean_range(double count) const {
    if (count < 0.0) throw std::domain_error("mean_range: negative count");
    switch (kind_) {
        case Kind::exact:
            return {count, count};
        case Kind::normal: {
            if (count == 0.0) {
                // A zero count gives the normal form a zero-width range;
                // substitute the exact zero-count tail limit instead.
                return {0.0, std::log(1.0 / epsilon_)};
            }
            double dev = gamma_ * std::sqrt(count);
            return {count > dev ? count - dev : 0.0, count + dev};
        }
        case Kind::chernoff: {
            double L = std::log(1.0 / epsilon_);
            if (count == 0.0) return {0.0, L};
            return {chernoff_lower(count, L), chernoff_upper(count, L)};
        }
    }
    throw NumericError("mean_range: unknown policy kind");
}

double gamma_for_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::domain_error("gamma_for_epsilon: epsilon must lie in (0, 0.5)");
    return -probit(epsilon);
}

double epsilon_for_gamma(double gamma) {
    return 0.5 * std::erfc(gamma / std::sqrt(2.0));
}

double FailureLedger::total() const {
    double t = 0.0;
    for (const auto& e : entries) t += e.probability;
    return t;
}

CoverageResult coverage_trial_serial(std::int64_t n_population, std::int64_t n_subset,
                                     double true_rate, const FluctuationPolicy& policy, int trials,
                                     std::uint64_t seed) {
    if (n_subset > n_population)
        throw ConfigError("coverage_trial: subset larger than population");
    CoverageResult res;
    res.trials = trials;
    for (int t = 0; t < trials; ++t)
        if (trial_violates(n_population, n_subset, true_rate, policy,
                           splitmix64(seed ^ static_cast<std::uint64_t>(t))))
            ++res.violations;
    res.violation_fraction = trials > 0 ? static_cast<double>(res.violations) / trials : 0.0;
    return res;
}

CoverageResult coverage_trial(std::int64_t n_population, std::int64_t n_subset, double true_rate,
                              const FluctuationPolicy& policy, int trials, std::uint64_t seed,
                              int threads) {
    if (n_subset > n_population)
        throw ConfigError("coverage_trial: subset larger than population");
    std::vector<char> violated(static_cast<std::size_t>(trials), 0);
    parallel_for(trials, threads, [&](std::int64_t t) {
        violated[static_cast<std::size_t>(t)] =
            trial_violates(n_population, n_subset, true_rate, policy,
                           splitmix64(seed ^ static_cast<std::uint64_t>(t)))
                ? 1
                : 0;
    });
    CoverageResult res;
    res.trials = trials;
    for (char v : violated) res.violations += v;
    res.violation_fraction = trials > 0 ? static_cast<double>(res.violations) / trials : 0.0;
    return res;
}

}  // namespace qkd
