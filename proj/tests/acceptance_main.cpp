// Acceptance suite: every release criterion as one pass/fail line, pinned
// tolerances inline. Exit code is the number of failed criteria.

#include "voltplug/voltplug.hpp"

#include "oracles.hpp"
#include "transcript.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace voltplug;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str());
    if (!pass) ++failures;
}

Scenario fixture(const char* name) {
    return load_scenario(std::string(SCENARIO_DIR) + "/" + name);
}

std::string run_cli(const std::string& args, int* exit_code = nullptr) {
    const std::string cmd = std::string(VOLTPLUG_CLI) + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return {};
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int rc = ::pclose(pipe);
    if (exit_code) *exit_code = rc;
    return out;
}

char buf[512];

// 1. The four-point crossing expression equals linear interpolation.
void criterion_1() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> amp(0.05, 400.0);
    std::uniform_real_distribution<double> t0(0.0, 1.0e6);
    std::uniform_real_distribution<double> dt(100.0, 5000.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        meter::CrossingPair p{amp(rng), -amp(rng), t0(rng), 0.0};
        p.tn_us = p.tp_us + dt(rng);
        const double eq = meter::zero_crossing(p);
        const double li = oracles::interp_crossing(p.vp, p.tp_us, p.vn, p.tn_us);
        worst = std::max(worst,
                         std::abs(eq - li) / std::max({std::abs(li), p.tn_us - p.tp_us, 1.0}));
    }
    std::snprintf(buf, sizeof buf, "worst relative difference %.2e vs 1e-9 on 1000 pairs",
                  worst);
    report(1, "four-point crossing equals linear interpolation", worst <= 1e-9, buf);
}

// 2. Sequential-sampling skew law, with and without resampling.
void criterion_2() {
    const Scenario base = fixture("skew_fine.json");
    bool pass = true;
    std::string detail;
    for (std::int64_t skew : {std::int64_t{50}, std::int64_t{112}, std::int64_t{500}}) {
        Scenario s = base;
        s.timing.skew_us = skew;
        auto stream =
            sim::run_sampler(s.waveform, s.chain, s.adc, s.timing, 700'000);
        const auto v = sim::select_channel(stream, sim::Channel::voltage);
        const auto i = sim::select_channel(stream, sim::Channel::current);

        meter::MeterConfig naive = s.meter_config();
        naive.compensate_skew = false;
        const double phi_naive = *meter::measure(v, i, s.chain, naive).phi_deg;
        const double residual = std::abs(std::abs(phi_naive) -
                                         0.0216 * static_cast<double>(skew));

        meter::MeterConfig comp = s.meter_config();
        const double phi_comp = *meter::measure(v, i, s.chain, comp).phi_deg;

        if (residual > 0.05 || std::abs(phi_comp) > 0.1) pass = false;
        std::snprintf(buf, sizeof buf, "[d=%ld: raw %.4f, resid %.4f, comp %.4f] ", skew,
                      phi_naive, residual, phi_comp);
        detail += buf;
    }
    report(2, "skew reads as 0.0216 deg/us raw and vanishes resampled", pass, detail);
}

// 3. Noiseless inductive recovery at 2 kHz / 10 bits.
void criterion_3() {
    const Scenario s = fixture("inductive_42deg.json");
    auto stream = sim::run_sampler(s.waveform, s.chain, s.adc, s.timing, 500'000);
    const auto m = meter::measure(sim::select_channel(stream, sim::Channel::voltage),
                                  sim::select_channel(stream, sim::Channel::current),
                                  s.chain, s.meter_config());
    const double phi = m.phi_deg.value_or(999.0);
    std::snprintf(buf, sizeof buf, "phi = %.3f deg vs 42.0 +- 0.5", phi);
    report(3, "noiseless 42 degree load reads 42 within half a degree",
           std::abs(phi - 42.0) <= 0.5, buf);
}

// 4. Calibrated-noise lag spread brackets the published deviations.
void criterion_4() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"calibrated_resistive.json", "calibrated_inductive.json"}) {
        const auto report_ = host::run_lag_protocol(fixture(name));
        if (!(report_.std_dev >= 2.0 && report_.std_dev <= 10.0)) pass = false;
        std::snprintf(buf, sizeof buf, "[%s: mean %.2f, std %.2f] ", report_.label.c_str(),
                      report_.mean, report_.std_dev);
        detail += buf;
    }
    report(4, "30-reading lag deviation falls in [2, 10] degrees", pass, detail + "vs [2,10]");
}

// 5. RMS method ordering and error bands.
void criterion_5() {
    const auto res = host::run_rms_protocol(fixture("calibrated_resistive.json"));
    const double truth = res.truth.mean;
    const double direct_err = std::abs(res.direct.mean - truth) / truth;
    const double peak_err = std::abs(res.peak.mean - truth) / truth;
    const bool pass = direct_err < peak_err && direct_err <= 0.01 && peak_err >= 0.02 &&
                      peak_err <= 0.08;
    std::snprintf(buf, sizeof buf,
                  "direct %.3f%% (<=1%%), peak %.3f%% (in [2,8]%%), ordered %s",
                  100.0 * direct_err, 100.0 * peak_err,
                  direct_err < peak_err ? "yes" : "no");
    report(5, "direct RMS beats the peak method at calibrated noise", pass, buf);
}

// 6. Active-vs-apparent power agreement on resistive loads.
void criterion_6() {
    const auto noiseless = host::run_power_protocol(fixture("resistive_127.json"));
    const auto calibrated = host::run_power_protocol(fixture("calibrated_resistive.json"));
    const bool pass = *noiseless.error_pct <= 0.1 && *calibrated.error_pct <= 3.0;
    std::snprintf(buf, sizeof buf, "noiseless %.4f%% (<=0.1%%), calibrated %.3f%% (<=3%%)",
                  *noiseless.error_pct, *calibrated.error_pct);
    report(6, "mean(s - p)/s within band on resistive loads", pass, buf);
}

// 7. Cycle-locked RMS against dense brute-force quadrature.
void criterion_7() {
    bool pass = true;
    std::string detail;

    struct Case {
        const char* name;
        std::function<double(double)> f; // continuous waveform, t in seconds
    };
    const double phase = 0.37;
    const Scenario switched = fixture("switched_3_5.json");
    std::vector<Case> cases{
        {"sine",
         [&](double t) { return 3.0 * std::sin(2.0 * sim::k_pi * 60.0 * t + phase); }},
        {"square",
         [&](double t) {
             const double frac = std::fmod(t * 60.0 + 0.21, 1.0);
             return frac < 0.5 ? 1.7 : -1.7;
         }},
        {"switched",
         [&](double t) {
             const auto& load = switched.waveform.load;
             const double theta = 2.0 * sim::k_pi * 60.0 * t;
             double shape = std::sin(theta);
             for (const auto& h : load.harmonics)
                 shape += h.amplitude *
                          std::sin(h.order * theta + sim::deg_to_rad(h.phase_deg));
             return std::numbers::sqrt2 * load.irms_a * shape;
         }},
    };

    for (const auto& c : cases) {
        meter::Series series;
        for (double t_us = 0.0; t_us < 500'000.0; t_us += 500.0)
            series.push_back({t_us, c.f(t_us * 1e-6)});
        const auto bounds = meter::downward_crossings(series);
        const auto rms = meter::true_rms(series, bounds);
        const double dense =
            oracles::dense_rms(c.f, bounds.front() * 1e-6, bounds.back() * 1e-6,
                               1'000'000L * static_cast<long>(bounds.size() - 1));
        const double rel = std::abs(rms.rms - dense) / dense;
        if (rel > 1e-3) pass = false;
        std::snprintf(buf, sizeof buf, "[%s: %.4f%%] ", c.name, 100.0 * rel);
        detail += buf;
    }
    report(7, "true RMS within 0.1% of dense quadrature", pass, detail + "vs 0.1%");
}

// 8. The 70-sample offset filter kills a 2.5 V DC term.
void criterion_8() {
    meter::Series raw;
    for (int k = 0; k < 4000; ++k) {
        const double t_us = k * 500.0;
        raw.push_back({t_us, 2.5 + 1.0 * std::sin(2.0 * sim::k_pi * 60.0 * t_us * 1e-6)});
    }
    const auto warmed = meter::remove_offset(raw, 70).warmed();
    double sum = 0.0;
    for (const auto& p : warmed) sum += p.value;
    const double residual = std::abs(sum / static_cast<double>(warmed.size()));
    std::snprintf(buf, sizeof buf, "|mean residual| = %.2e V vs 0.025 V", residual);
    report(8, "offset filter drives the DC residual below 1%", residual < 0.025, buf);
}

// 9. Protocol conformance: codec identity, key-pin gate, golden transcripts.
void criterion_9() {
    bool pass = true;
    std::string detail;

    std::vector<wire::Command> commands{
        wire::RelayOn{},
        wire::RelayOff{},
        wire::Read{},
        wire::Status{},
        wire::AtCommand{wire::AtPing{}},
        wire::AtCommand{wire::AtName{"plug01"}},
        wire::AtCommand{wire::AtPswd{"1234"}},
        wire::AtCommand{wire::AtRole{wire::Role::slave}},
        wire::AtCommand{wire::AtRole{wire::Role::master}},
    };
    for (const auto& cmd : commands) {
        const auto round = wire::decode(wire::encode(cmd));
        if (!wire::ok(round) || !(std::get<wire::Command>(round) == cmd)) pass = false;
    }
    detail += "[codec identity] ";

    auto at_plug = transcript::make_device(true);
    auto data_plug = transcript::make_device(false);
    if (at_plug.mode() != device::Mode::at || data_plug.mode() != device::Mode::data)
        pass = false;
    if (at_plug.handle_line("READ") != "ERROR:(0)") pass = false;
    if (data_plug.handle_line("AT") != "ERROR:MODE") pass = false;
    detail += "[key-pin gate] ";

    for (const char* name : {"at_session.txt", "data_session.txt"}) {
        const auto result = transcript::replay(std::string(GOLDEN_DIR) + "/" + name);
        if (result.mismatches != 0) {
            pass = false;
            detail += result.report;
        }
    }
    detail += "[transcripts byte-exact]";
    report(9, "wire protocol conformance", pass, detail);
}

// 10. CLI determinism: byte-identical repeated runs.
void criterion_10() {
    bool pass = true;
    std::string detail;
    const std::string scenarios = SCENARIO_DIR;

    const std::string sim_args =
        "simulate --scenario " + scenarios + "/calibrated_resistive.json --seed 7";
    const auto a = run_cli(sim_args);
    const auto b = run_cli(sim_args);
    if (a.empty() || a != b) pass = false;
    detail += "[simulate " + std::to_string(a.size()) + " bytes] ";

    for (const std::string which : {"lag", "rms", "power"}) {
        const std::string args = "validate " + which + " --scenario " + scenarios +
                                 "/calibrated_resistive.json --format json";
        const auto x = run_cli(args);
        const auto y = run_cli(args);
        if (x.empty() || x != y) pass = false;
        detail += "[validate " + which + "] ";
    }
    report(10, "CLI runs are byte-reproducible", pass, detail);
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
