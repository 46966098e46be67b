#include "voltplug/host.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <regex>

using namespace voltplug;
using Catch::Approx;

namespace {

Scenario load_fixture(const char* name) {
    return load_scenario(std::string(SCENARIO_DIR) + "/" + name);
}

} // namespace

TEST_CASE("stats: mean and population standard deviation", "[host]") {
    CHECK(host::stats({5.0, 5.0, 5.0}).mean == 5.0);
    CHECK(host::stats({5.0, 5.0, 5.0}).std_dev == 0.0);
    const auto s = host::stats({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == Approx(2.5));
    CHECK(s.std_dev == Approx(1.118033988749895));
    CHECK_THROWS_AS(host::stats({}), domain_error);
    CHECK_THROWS_AS(host::stats({1.0}), domain_error);
}

TEST_CASE("lag protocol: noiseless resistive with skew compensation is flat",
          "[host][protocol]") {
    const auto scenario = load_fixture("resistive_127.json");
    host::LagOptions opt;
    opt.compensate_skew = true;
    const auto report = host::run_lag_protocol(scenario, opt);
    CHECK(report.n == 30);
    CHECK(std::abs(report.mean) <= 0.1);
    CHECK(report.std_dev < 0.2);
    REQUIRE(report.reference_value.has_value());
    CHECK(*report.reference_value == 0.0);
}

TEST_CASE("lag protocol: calibrated resistive shows the sequential-read bias",
          "[host][protocol]") {
    const auto scenario = load_fixture("calibrated_resistive.json");
    const auto report = host::run_lag_protocol(scenario);
    CHECK(report.mean > -6.0);
    CHECK(report.mean < 2.0);
    CHECK(report.std_dev > 2.0);
    CHECK(report.std_dev < 10.0);
}

TEST_CASE("lag protocol: calibrated inductive recovers the load phase",
          "[host][protocol]") {
    const auto scenario = load_fixture("calibrated_inductive.json");
    const auto report = host::run_lag_protocol(scenario);
    CHECK(report.mean == Approx(42.0).margin(3.0));
    CHECK(report.std_dev > 2.0);
    CHECK(report.std_dev < 10.0);
    REQUIRE(report.reference_value.has_value());
    CHECK(*report.reference_value == 42.0);
}

TEST_CASE("lag protocol: refuses tiny runs", "[host][protocol]") {
    auto scenario = load_fixture("resistive_127.json");
    host::LagOptions opt;
    opt.n = 1;
    CHECK_THROWS_AS(host::run_lag_protocol(scenario, opt), domain_error);
}

TEST_CASE("rms protocol: truth mean is exact, methods rank as published",
          "[host][protocol]") {
    const auto scenario = load_fixture("calibrated_resistive.json");
    const auto res = host::run_rms_protocol(scenario);

    // The simulator plays the multimeter: its report averages back to the
    // nominal level; the spread comes from drift alone.
    CHECK(res.truth.mean == Approx(131.0).epsilon(1e-9));
    CHECK(res.truth.std_dev > 0.0);
    CHECK(res.truth.std_dev < 1.0);

    const double truth = res.truth.mean;
    const double peak_err = std::abs(res.peak.mean - truth) / truth;
    const double direct_err = std::abs(res.direct.mean - truth) / truth;
    CHECK(direct_err < peak_err);
    CHECK(direct_err <= 0.01);
    CHECK(peak_err >= 0.02);
    CHECK(peak_err <= 0.08);
}

TEST_CASE("rms protocol: the ranking survives any noise at or above one LSB",
          "[host][protocol][property]") {
    auto scenario = load_fixture("calibrated_resistive.json");
    scenario.drift.reset();
    host::RmsOptions opt;
    opt.n = 12; // smaller batches keep the sweep quick
    for (double sigma_v : {0.0, 1.0, 4.0}) {
        for (std::uint64_t seed : {3ull, 11ull}) {
            scenario.waveform.noise.sigma_v = sigma_v;
            scenario.waveform.noise.seed = seed;
            const auto res = host::run_rms_protocol(scenario, opt);
            const double truth = res.truth.mean;
            CHECK(std::abs(res.direct.mean - truth) < std::abs(res.peak.mean - truth));
        }
    }
}

TEST_CASE("power protocol: noiseless and calibrated agreement", "[host][protocol]") {
    const auto noiseless = host::run_power_protocol(load_fixture("resistive_127.json"));
    REQUIRE(noiseless.error_pct.has_value());
    CHECK(*noiseless.error_pct <= 0.1);

    const auto calibrated =
        host::run_power_protocol(load_fixture("calibrated_resistive.json"));
    REQUIRE(calibrated.error_pct.has_value());
    CHECK(*calibrated.error_pct <= 3.0);
    CHECK(calibrated.std_dev > 0.0);
}

TEST_CASE("power protocol: rejects non-resistive scenarios", "[host][protocol]") {
    const auto scenario = load_fixture("calibrated_inductive.json");
    CHECK_THROWS_AS(host::run_power_protocol(scenario), domain_error);
}

TEST_CASE("validation reports are reproducible", "[host]") {
    const auto scenario = load_fixture("calibrated_resistive.json");
    const auto a = host::report_to_json(host::run_lag_protocol(scenario)).dump();
    const auto b = host::report_to_json(host::run_lag_protocol(scenario)).dump();
    CHECK(a == b);
}

TEST_CASE("table and JSON renderings agree at the printed precision", "[host]") {
    const auto scenario = load_fixture("calibrated_resistive.json");
    const auto report = host::run_lag_protocol(scenario);
    const auto table = host::render_table({report});
    const auto j = host::report_to_json(report);

    // Pull the mean/std cells out of the table row.
    std::smatch match;
    std::regex row(report.label + R"(\s+(-?\d+\.\d\d)\s+(-?\d+\.\d\d))");
    REQUIRE(std::regex_search(table, match, row));
    char expected_mean[32], expected_std[32];
    std::snprintf(expected_mean, sizeof expected_mean, "%.2f", j.at("mean").get<double>());
    std::snprintf(expected_std, sizeof expected_std, "%.2f", j.at("std_dev").get<double>());
    CHECK(match[1].str() == expected_mean);
    CHECK(match[2].str() == expected_std);
    CHECK(table.find("population") != std::string::npos);
    CHECK(j.at("std_dev_kind") == "population");
}

TEST_CASE("scenario JSON: defaults, round-trip, and typo rejection", "[host][scenario]") {
    const auto scenario = load_fixture("calibrated_inductive.json");
    CHECK(scenario.waveform.load.kind == sim::LoadKind::inductive);
    CHECK(scenario.waveform.load.phase_deg == 42.0);
    CHECK(scenario.drift.has_value());

    const auto round = scenario_from_json(scenario_to_json(scenario));
    CHECK(scenario_to_json(round) == scenario_to_json(scenario));

    auto bad = scenario_to_json(scenario);
    bad["waveform"]["vrsm"] = 120.0; // typo must not pass silently
    CHECK_THROWS_AS(scenario_from_json(bad), config_error);

    nlohmann::json defaults = {{"id", "empty"}};
    const auto d = scenario_from_json(defaults);
    CHECK(d.waveform.vrms_v == 127.0);
    CHECK(d.timing.period_us == 500);
    CHECK(d.offset_window == 70);
}

TEST_CASE("drift: load current tracks the drifted voltage", "[host][scenario]") {
    auto scenario = load_fixture("calibrated_inductive.json");
    scenario.drift = Drift{1.0, 900.0};
    const auto w = scenario.waveform_at(225'000'000); // quarter period: +1%
    CHECK(w.vrms_v == Approx(131.0 * 1.01));
    CHECK(w.load.irms_a == Approx(scenario.waveform.load.irms_a * 1.01));
}
