#include <doctest.h>

#include <cmath>

#include "qkd/errors.hpp"
#include "qkd/fluctuation.hpp"
#include "test_oracles.hpp"

using namespace qkd;

TEST_CASE("exact policy collapses to the observation") {
    auto policy = FluctuationPolicy::exact();
    for (double k : {0.0, 1.0, 1234.5, 1e8}) {
        auto r = policy.mean_range(k);
        CHECK(r.lower == k);
        CHECK(r.upper == k);
    }
}

TEST_CASE("normal policy: count 1e6 at gamma 5.3") {
    auto r = FluctuationPolicy::normal(5.3).mean_range(1e6);
    CHECK(r.lower == doctest::Approx(1e6 - 5300.0).epsilon(1e-12));
    CHECK(r.upper == doctest::Approx(1e6 + 5300.0).epsilon(1e-12));
}

TEST_CASE("chernoff policy: zero count solves the exact tail") {
    auto r = FluctuationPolicy::chernoff(1e-10).mean_range(0.0);
    CHECK(r.lower == 0.0);
    CHECK(r.upper == doctest::Approx(std::log(1e10)).epsilon(1e-12));
    // direct tail evaluation: P[X=0 | m] = exp(-m) equals epsilon at the bound
    CHECK(std::exp(-r.upper) == doctest::Approx(1e-10).epsilon(1e-9));
}

TEST_CASE("chernoff bisection agrees with the closed roots") {
    for (double eps : {1e-3, 1e-7, 1e-10}) {
        auto policy = FluctuationPolicy::chernoff(eps);
        for (double k : {5.0, 100.0, 1e4, 1e8}) {
            auto r = policy.mean_range(k);
            CHECK(r.upper == doctest::Approx(oracles::chernoff_upper_root(k, eps)).epsilon(1e-10));
            CHECK(r.lower == doctest::Approx(oracles::chernoff_lower_root(k, eps)).epsilon(1e-10));
        }
    }
}

TEST_CASE("gamma_for_epsilon values") {
    CHECK(gamma_for_epsilon(1e-7) == doctest::Approx(5.1993).epsilon(2e-4));
    CHECK(gamma_for_epsilon(0.1587) == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(gamma_for_epsilon(1e-10) == doctest::Approx(6.3613).epsilon(2e-4));
    CHECK_THROWS_AS(gamma_for_epsilon(0.7), std::domain_error);
    CHECK_THROWS_AS(gamma_for_epsilon(0.0), std::domain_error);
}

TEST_CASE("gamma_for_epsilon matches bisection on the exact CDF") {
    for (double eps : {0.05, 1e-3, 1e-7, 1e-12}) {
        CHECK(gamma_for_epsilon(eps) ==
              doctest::Approx(oracles::normal_quantile_bisect(eps)).epsilon(1e-8));
        CHECK(epsilon_for_gamma(gamma_for_epsilon(eps)) == doctest::Approx(eps).epsilon(1e-8));
    }
}

TEST_CASE("ranges bracket the count and widen as epsilon shrinks") {
    for (double k : {0.0, 3.0, 250.0, 1e6}) {
        double prev_width = -1.0;
        for (double eps : {1e-3, 1e-6, 1e-9, 1e-12}) {
            for (auto policy :
                 {FluctuationPolicy::chernoff(eps), FluctuationPolicy::normal(gamma_for_epsilon(eps))}) {
                auto r = policy.mean_range(k);
                CHECK(r.lower <= k);
                CHECK(r.upper >= k);
            }
            auto r = FluctuationPolicy::chernoff(eps).mean_range(k);
            double width = r.upper - r.lower;
            CHECK(width >= prev_width);
            prev_width = width;
        }
    }
}

TEST_CASE("chernoff range contains the normal range at matched epsilon") {
    // Below roughly a thousand counts the rigorous lower tail limit is
    // tighter than the symmetric normal form, so containment starts at 1e3.
    for (double eps : {1e-3, 1e-7, 1e-10}) {
        auto chern = FluctuationPolicy::chernoff(eps);
        auto norm = FluctuationPolicy::normal(gamma_for_epsilon(eps));
        for (double k = 1e3; k <= 1e8; k *= 10.0) {
            auto rc = chern.mean_range(k);
            auto rn = norm.mean_range(k);
            CHECK(rc.lower <= rn.lower + 1e-9 * k);
            CHECK(rc.upper >= rn.upper - 1e-9 * k);
        }
    }
}

TEST_CASE("ledger sums its entries") {
    FailureLedger ledger;
    ledger.add("a", 1e-7);
    ledger.add("b", 2e-7);
    CHECK(ledger.total() == doctest::Approx(3e-7).epsilon(1e-12));
}

TEST_CASE("coverage: exact policy rejects essentially every noisy trial") {
    auto res = coverage_trial_serial(100'000, 50'000, 0.01, FluctuationPolicy::exact(), 200, 11);
    CHECK(res.violation_fraction > 0.9);
}

TEST_CASE("coverage: normal and chernoff policies hold their budget (small run)") {
    auto normal = FluctuationPolicy::normal(gamma_for_epsilon(0.05));
    auto rn = coverage_trial(100'000, 50'000, 0.01, normal, 1'000, 17);
    // 3-sigma slack on 1000 trials
    CHECK(rn.violation_fraction <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 1'000));

    auto chern = FluctuationPolicy::chernoff(0.01);
    auto rc = coverage_trial(100'000, 50'000, 0.01, chern, 1'000, 17);
    CHECK(rc.violation_fraction <= 0.01);
}

TEST_CASE("coverage kernel: parallel matches the serial reference") {
    auto policy = FluctuationPolicy::normal(1.96);
    auto a = coverage_trial_serial(20'000, 10'000, 0.02, policy, 400, 23);
    auto b = coverage_trial(20'000, 10'000, 0.02, policy, 400, 23, 4);
    CHECK(a.violations == b.violations);
    CHECK(a.violation_fraction == b.violation_fraction);
}

TEST_CASE("coverage rejects oversized subsets") {
    CHECK_THROWS_AS(coverage_trial(10, 11, 0.5, FluctuationPolicy::exact(), 1, 1), ConfigError);
}
