#include <doctest.h>

#include <cmath>

#include "qkd/errors.hpp"
#include "qkd/json_io.hpp"

using namespace qkd;
using nlohmann::json;

namespace {
SourceSpec reference_spec() { return SourceSpec{0.071, 0.212, 0.280, 0.357, 0.121, 0.479}; }
}  // namespace

TEST_CASE("source spec round trip") {
    auto j = to_json(reference_spec());
    auto spec = source_spec_from_json(j);
    CHECK(spec.mu_x == reference_spec().mu_x);
    CHECK(spec.p_z == reference_spec().p_z);
    CHECK_THROWS_AS(source_spec_from_json(json{{"mu_x", 0.1}}), ConfigError);
}

TEST_CASE("policy serialization and parsing") {
    auto p = policy_from_json(to_json(FluctuationPolicy::normal(5.3)));
    CHECK(p.kind() == FluctuationPolicy::Kind::normal);
    CHECK(p.gamma() == 5.3);
    p = policy_from_string("chernoff:1e-10");
    CHECK(p.kind() == FluctuationPolicy::Kind::chernoff);
    CHECK(p.epsilon() == 1e-10);
    CHECK(policy_from_string("exact").kind() == FluctuationPolicy::Kind::exact);
    CHECK_THROWS_AS(policy_from_string("normal"), ConfigError);
    CHECK_THROWS_AS(policy_from_string("gauss:1"), ConfigError);
}

TEST_CASE("observed stats round trip keeps counts exact") {
    ChannelParams params = ChannelParams::preset('a');
    params.distance_km = 30.0;
    auto stats = simulate_observed(reference_spec(), params, 123'456'789LL, SimMode::sampled, 7);
    auto j = to_json(stats);
    auto back = observed_stats_from_json(j);
    for (PairSource s : kTrackedSources) {
        CHECK(back.at(s).pairs == stats.at(s).pairs);
        CHECK(back.at(s).detections == stats.at(s).detections);
        CHECK(back.at(s).errors == stats.at(s).errors);
    }
    // expected mode carries fractional counts through unchanged
    auto estats = simulate_observed(reference_spec(), params, 123'456'789LL, SimMode::expected);
    auto eback = observed_stats_from_json(to_json(estats));
    for (PairSource s : kTrackedSources)
        CHECK(eback.at(s).detections == estats.at(s).detections);
}

TEST_CASE("inconsistent stats documents are rejected") {
    ChannelParams params = ChannelParams::preset('a');
    auto stats = simulate_observed(reference_spec(), params, 1'000'000LL, SimMode::expected);
    auto j = to_json(stats);
    j["sources"]["xx"]["k_err"] = j["sources"]["xx"]["k"].get<double>() * 2.0;
    CHECK_THROWS_AS(observed_stats_from_json(j), ConfigError);
    j["sources"].erase("oo");
    CHECK_THROWS_AS(observed_stats_from_json(j), ConfigError);
}

TEST_CASE("config digest is stable and sensitive") {
    json a{{"device", "a"}, {"n_total", 1e10}};
    json b{{"n_total", 1e10}, {"device", "a"}};  // key order is canonicalized
    CHECK(config_digest(a) == config_digest(b));
    json c = a;
    c["n_total"] = 2e10;
    CHECK(config_digest(a) != config_digest(c));
    CHECK(config_digest(a).size() == 16);
}

TEST_CASE("run config parsing") {
    json j{{"device", "b"},
           {"distance_km", 50.0},
           {"n_total", 1e9},
           {"policy", {{"policy", "chernoff"}, {"epsilon", 1e-10}}},
           {"source", to_json(reference_spec())},
           {"grid_points", 101},
           {"seed", 9},
           {"methods", {"this_work", "independent"}}};
    auto cfg = run_config_from_json(j);
    CHECK(cfg.params.eta_d == 0.40);
    CHECK(cfg.params.p_d == 1e-7);
    CHECK(cfg.distances_km.size() == 1);
    CHECK(cfg.n_total == 1'000'000'000LL);
    CHECK(cfg.policy.kind() == FluctuationPolicy::Kind::chernoff);
    REQUIRE(cfg.source.has_value());
    CHECK(cfg.source->mu_z == 0.280);
    CHECK(cfg.grid_points == 101);
    CHECK(cfg.methods.size() == 2);
    CHECK(cfg.search.seed == 9);

    json opt = j;
    opt["source"] = "optimize";
    CHECK(!run_config_from_json(opt).source.has_value());

    json bad = j;
    bad["device"] = "q";
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    bad = j;
    bad["distances"] = {{"min", 10.0}, {"max", 5.0}, {"step", 1.0}};
    bad.erase("distance_km");
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
}

TEST_CASE("distance grids expand") {
    json j{{"device", "a"}, {"distances", {{"min", 10.0}, {"max", 20.0}, {"step", 5.0}}}};
    auto cfg = run_config_from_json(j);
    REQUIRE(cfg.distances_km.size() == 3);
    CHECK(cfg.distances_km[1] == 15.0);
}

TEST_CASE("LP audit dump carries the problem and the optimum") {
    ChannelParams params = ChannelParams::preset('a');
    params.distance_km = 40.0;
    auto stats = simulate_observed(reference_spec(), params, 10'000'000'000LL, SimMode::expected);
    auto policy = FluctuationPolicy::normal(5.3);
    auto cons = build_constraints(stats, policy);
    auto coeff = BoundCoefficients::from_spec(reference_spec());
    auto iv = h_interval(stats, reference_spec(), policy);
    auto audit = lp_audit_json(cons, coeff, iv.h);
    CHECK(audit["status"] == "optimal");
    CHECK(audit["variables"].size() == 7);
    CHECK(audit["rows"].size() == 6);  // five joint rows and the H equality
    CHECK(audit["s11"].get<double>() > 0.0);
    CHECK(audit.contains("active_rows"));
}
