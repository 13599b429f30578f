#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qkd {

struct MeanRange {
    double lower = 0.0;
    double upper = 0.0;
};

// Maps an observed count to a confidence range for its expectation.
// normal: count +- gamma*sqrt(count); chernoff: tail-bound inversion at
// failure probability epsilon per side; exact: zero-width (asymptotic).
class FluctuationPolicy {
  public:
    enum class Kind { exact, normal, chernoff };

    static FluctuationPolicy exact();
    static FluctuationPolicy normal(double gamma);
    static FluctuationPolicy chernoff(double epsilon);

    Kind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double epsilon() const { return epsilon_; }

    // Failure probability of a single one-sided bound under this policy.
    double one_sided_failure() const;

    MeanRange mean_range(double count) const;

  private:
    FluctuationPolicy(Kind k, double gamma, double epsilon)
        : kind_(k), gamma_(gamma), epsilon_(epsilon) {}
    Kind kind_;
    double gamma_;
    double epsilon_;
};

// Upper-tail standard normal quantile: the gamma whose one-sided failure
// probability is epsilon. Valid for 0 < epsilon < 0.5.
double gamma_for_epsilon(double epsilon);

// One-sided failure probability of a normal deviation multiplier gamma.
double epsilon_for_gamma(double gamma);

// Per-evaluation record of every statistical bound used; the union-bound
// total is reported alongside the key rate.
struct FailureLedger {
    struct Entry {
        std::string name;
        double probability;
    };
    std::vector<Entry> entries;

    void add(std::string name, double probability) {
        entries.push_back({std::move(name), probability});
    }
    double total() const;
};

struct CoverageResult {
    long violations = 0;
    long trials = 0;
    double violation_fraction = 0.0;
};

// Monte Carlo check of the confidence-bracket guarantee: populations of iid
// Bernoulli outcomes, a uniform random subset each trial, and a test whether
// the subset count's mean_range brackets the population rate. Deterministic
// in (seed) for any thread count.
CoverageResult coverage_trial(std::int64_t n_population, std::int64_t n_subset, double true_rate,
                              const FluctuationPolicy& policy, int trials, std::uint64_t seed,
                              int threads = 0);

// Reference implementation used to validate the parallel kernel.
CoverageResult coverage_trial_serial(std::int64_t n_population, std::int64_t n_subset,
                                     double true_rate, const FluctuationPolicy& policy, int trials,
                                     std::uint64_t seed);

}  // namespace qkd
