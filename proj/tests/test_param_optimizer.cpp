#include <doctest.h>

#include <cmath>

#include "qkd/errors.hpp"
#include "qkd/param_optimizer.hpp"

using namespace qkd;

namespace {

SearchConfig quick_search(std::uint64_t seed = 5) {
    SearchConfig s;
    s.starts = 6;
    s.max_iterations = 120;
    s.seed = seed;
    return s;
}

KeyRateConfig quick_rate() {
    KeyRateConfig cfg;
    cfg.grid_points = 41;
    return cfg;
}

}  // namespace

TEST_CASE("optimization is deterministic in the seed") {
    ChannelParams params = ChannelParams::preset('a');
    params.distance_km = 20.0;
    auto policy = FluctuationPolicy::normal(5.3);
    auto a = optimize(params, 1'000'000'000LL, policy, quick_search(), RateMethod::this_work, quick_rate());
    auto b = optimize(params, 1'000'000'000LL, policy, quick_search(), RateMethod::this_work, quick_rate());
    CHECK(a.best_result.rate_per_pair == b.best_result.rate_per_pair);
    CHECK(a.best_spec.mu_x == b.best_spec.mu_x);
    CHECK(a.best_spec.p_z == b.best_spec.p_z);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("thread count does not change the optimum") {
    ChannelParams params = ChannelParams::preset('a');
    params.distance_km = 20.0;
    auto policy = FluctuationPolicy::normal(5.3);
    SearchConfig s1 = quick_search();
    s1.threads = 1;
    SearchConfig s4 = quick_search();
    s4.threads = 4;
    auto a = optimize(params, 1'000'000'000LL, policy, s1, RateMethod::this_work, quick_rate());
    auto b = optimize(params, 1'000'000'000LL, policy, s4, RateMethod::this_work, quick_rate());
    CHECK(a.best_result.rate_per_pair == b.best_result.rate_per_pair);
    CHECK(a.best_spec.mu_x == b.best_spec.mu_x);
}

TEST_CASE("incumbent improves monotonically within every start") {
    ChannelParams params = ChannelParams::preset('b');
    params.distance_km = 0.0;
    // near-asymptotic configuration: huge pulse count, exact policy
    auto res = optimize(params, 10'000'000'000'000'000LL, FluctuationPolicy::exact(),
                        quick_search(), RateMethod::this_work, quick_rate());
    CHECK(res.best_result.rate_per_pair > 0.0);
    for (const auto& rec : res.history) {
        for (std::size_t i = 1; i < rec.incumbents.size(); ++i)
            CHECK(rec.incumbents[i] >= rec.incumbents[i - 1] - 1e-18);
    }
    // the optimizer leans on the signal source in the asymptotic regime
    CHECK(res.best_spec.p_z > 0.3);
}

TEST_CASE("reported optimum is a valid spec evaluated at its own rate") {
    ChannelParams params = ChannelParams::preset('a');
    params.distance_km = 25.0;
    auto policy = FluctuationPolicy::normal(5.3);
    auto res = optimize(params, 10'000'000'000LL, policy, quick_search(), RateMethod::this_work,
                        quick_rate());
    CHECK(validate_spec(res.best_spec).empty());
    for (const auto& rec : res.history) CHECK(res.best_result.rate_per_pair >= rec.rate - 1e-18);
    auto stats = simulate_observed(res.best_spec, params, 10'000'000'000LL, SimMode::expected);
    auto check = worst_case_rate(stats, res.best_spec, params, policy, quick_rate());
    CHECK(check.rate_per_pair == doctest::Approx(res.best_result.rate_per_pair).epsilon(1e-12));
}

TEST_CASE("distance scan: single point matches optimize and rates do not increase") {
    ChannelParams params = ChannelParams::preset('a');
    auto policy = FluctuationPolicy::normal(5.3);
    auto search = quick_search(9);
    auto rows = scan_distance(params, 20.0, 20.0, 5.0, 10'000'000'000LL, policy,
                              {RateMethod::this_work}, search, quick_rate());
    REQUIRE(rows.size() == 1);
    params.distance_km = 20.0;
    auto direct = optimize(params, 10'000'000'000LL, policy, search, RateMethod::this_work,
                           quick_rate());
    CHECK(rows[0].rate_per_pair == doctest::Approx(direct.best_result.rate_per_pair).epsilon(1e-12));

    auto sweep = scan_distance(ChannelParams::preset('a'), 10.0, 30.0, 10.0, 10'000'000'000LL,
                               policy, {RateMethod::this_work}, search, quick_rate());
    REQUIRE(sweep.size() == 3);
    CHECK(sweep[0].rate_per_pair >= sweep[1].rate_per_pair * 0.999);
    CHECK(sweep[1].rate_per_pair >= sweep[2].rate_per_pair * 0.999);
}

TEST_CASE("pulse-count scan rates do not decrease") {
    ChannelParams params = ChannelParams::preset('b');
    auto policy = FluctuationPolicy::normal(5.3);
    auto rows = scan_ntotal(params, 30.0, {1'000'000'000LL, 3'000'000'000LL, 10'000'000'000LL},
                            policy, {RateMethod::this_work}, quick_search(13), quick_rate());
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rate_per_pair >= rows[0].rate_per_pair * 0.999);
    CHECK(rows[2].rate_per_pair >= rows[1].rate_per_pair * 0.999);
}

TEST_CASE("scan CSV carries the fixed column set") {
    ScanRow row;
    row.distance_km = 40.0;
    row.n_total = 1'000'000'000LL;
    row.method = RateMethod::this_work;
    row.rate_per_pair = 1.25e-6;
    row.bits_per_second = 1250.0;
    row.spec = SourceSpec{0.071, 0.212, 0.280, 0.357, 0.121, 0.479};
    std::string csv = scan_csv({row});
    CHECK(csv.find("distance_km,n_total,method,rate_per_pair,bps,mu_x,mu_y,mu_z,p_x,p_y,p_z,"
                   "h_star,s11,e11,ledger_total") == 0);
    CHECK(csv.find("this_work") != std::string::npos);
    CHECK(csv.find("1.25e-06") != std::string::npos);
}

TEST_CASE("empty scan ranges are rejected") {
    ChannelParams params = ChannelParams::preset('a');
    auto policy = FluctuationPolicy::exact();
    CHECK_THROWS_AS(scan_distance(params, 30.0, 20.0, 5.0, 1000, policy,
                                  {RateMethod::this_work}, quick_search(), quick_rate()),
                    ConfigError);
    CHECK_THROWS_AS(scan_ntotal(params, 30.0, {}, policy, {RateMethod::this_work}, quick_search(),
                                quick_rate()),
                    ConfigError);
}
