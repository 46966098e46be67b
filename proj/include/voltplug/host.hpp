#pragma once

#include "voltplug/errors.hpp"
#include "voltplug/metering.hpp"
#include "voltplug/rng.hpp"
#include "voltplug/scenario.hpp"
#include "voltplug/simkernel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace voltplug::host {

// ----------------------------------------------------------------------------
// Statistics
// ----------------------------------------------------------------------------

struct Stats {
    double mean = 0.0;
    double std_dev = 0.0; // population (n divisor)
};

inline Stats stats(const std::vector<double>& values) {
    if (values.size() < 2)
        throw domain_error("stats: need at least 2 values");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

/// One statistical row of a validation run. std_dev is always the population
/// estimator; every rendering flags that.
struct ValidationReport {
    std::string protocol; // lag | rms | power
    std::string label;    // load kind, rms method, or "s_minus_p"
    int n = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    std::optional<double> reference_value;
    std::optional<double> error_abs;
    std::optional<double> error_pct;
};

inline ValidationReport make_report(std::string protocol, std::string label,
                                    const std::vector<double>& values,
                                    std::optional<double> reference) {
    const Stats st = stats(values);
    ValidationReport r;
    r.protocol = std::move(protocol);
    r.label = std::move(label);
    r.n = static_cast<int>(values.size());
    r.mean = st.mean;
    r.std_dev = st.std_dev;
    if (reference) {
        r.reference_value = reference;
        r.error_abs = std::abs(st.mean - *reference);
        if (*reference != 0.0) r.error_pct = 100.0 * *r.error_abs / std::abs(*reference);
    }
    return r;
}

// ----------------------------------------------------------------------------
// Protocol drivers
// ----------------------------------------------------------------------------

namespace detail {

struct Capture {
    sim::SampleStream v;
    sim::SampleStream i;
};

inline Capture capture(const Scenario& scenario, std::int64_t t_virtual_us,
                       std::uint64_t reading_index, std::int64_t duration_us) {
    sim::WaveformSpec spec = scenario.waveform_at(t_virtual_us);
    spec.noise.seed = derive_seed(spec.noise.seed, reading_index);
    auto stream = sim::run_sampler(spec, scenario.chain, scenario.adc,
                                   scenario.timing, duration_us);
    return {sim::select_channel(stream, sim::Channel::voltage),
            sim::select_channel(stream, sim::Channel::current)};
}

inline std::int64_t cycles_us(const Scenario& s, double cycles) {
    return static_cast<std::int64_t>(std::ceil(cycles * 1e6 / s.waveform.freq_hz));
}

inline std::int64_t warmup_us(const Scenario& s) {
    return s.timing.period_us * static_cast<std::int64_t>(s.offset_window);
}

} // namespace detail

struct LagOptions {
    int n = 30;
    /// Off reproduces the sequential-read artifact the protocol was built to
    /// expose; on measures the load alone.
    bool compensate_skew = false;
};

/// Collect n zero-crossing-pair lags from one continuous run and report their
/// statistics against the load's nominal phase.
inline ValidationReport run_lag_protocol(const Scenario& scenario, LagOptions opt = {}) {
    scenario.validate();
    if (opt.n < 2) throw domain_error("lag protocol: need n >= 2");

    // One continuous run with the scenario's own seed; the n readings are
    // consecutive crossing pairs, as on the real prototype.
    const std::int64_t duration =
        detail::warmup_us(scenario) + detail::cycles_us(scenario, opt.n + 10.0);
    auto stream = sim::run_sampler(scenario.waveform, scenario.chain, scenario.adc,
                                   scenario.timing, duration);
    detail::Capture cap{sim::select_channel(stream, sim::Channel::voltage),
                        sim::select_channel(stream, sim::Channel::current)};

    meter::MeterConfig cfg = scenario.meter_config();
    cfg.compensate_skew = opt.compensate_skew;
    auto pipe = meter::run_pipeline(cap.v, cap.i, scenario.chain, cfg);
    if (pipe.pair_lags.size() < static_cast<std::size_t>(opt.n))
        throw insufficient_data_error("lag protocol: fewer crossing pairs than requested");

    std::vector<double> lags;
    lags.reserve(static_cast<std::size_t>(opt.n));
    for (int k = 0; k < opt.n; ++k) lags.push_back(pipe.pair_lags[static_cast<std::size_t>(k)].phi_deg);

    std::optional<double> reference;
    std::string label;
    switch (scenario.waveform.load.kind) {
    case sim::LoadKind::resistive:
        reference = 0.0;
        label = "resistive";
        break;
    case sim::LoadKind::inductive:
        reference = scenario.waveform.load.phase_deg;
        label = "inductive";
        break;
    case sim::LoadKind::switched:
        label = "switched";
        break;
    }
    return make_report("lag", label, lags, reference);
}

struct RmsOptions {
    int n = 30;
    double interval_virtual_s = 60.0;
};

struct RmsProtocolResult {
    ValidationReport truth;  // the simulator plays the multimeter
    ValidationReport peak;   // Vp / sqrt(2)
    ValidationReport direct; // cycle-locked root mean square
};

/// Three-way comparison of RMS estimates over n interval-spaced readings.
/// The truth report's spread comes from scenario drift alone.
inline RmsProtocolResult run_rms_protocol(const Scenario& scenario, RmsOptions opt = {}) {
    scenario.validate();
    if (opt.n < 2) throw domain_error("rms protocol: need n >= 2");
    if (!(opt.interval_virtual_s > 0.0))
        throw domain_error("rms protocol: interval must be > 0");

    const std::int64_t duration =
        detail::warmup_us(scenario) + detail::cycles_us(scenario, 30.0);
    std::vector<double> truth, peak, direct;
    for (int j = 0; j < opt.n; ++j) {
        const auto t_j =
            static_cast<std::int64_t>(j * opt.interval_virtual_s * 1e6);
        auto cap = detail::capture(scenario, t_j, static_cast<std::uint64_t>(j), duration);
        auto pipe = meter::run_pipeline(cap.v, cap.i, scenario.chain,
                                        scenario.meter_config());
        truth.push_back(scenario.waveform_at(t_j).vrms_v);
        peak.push_back(meter::rms_from_peak(pipe.v_peak));
        direct.push_back(pipe.measurement.vrms);
    }

    const double truth_mean = stats(truth).mean;
    RmsProtocolResult res{
        make_report("rms", "truth", truth, scenario.waveform.vrms_v),
        make_report("rms", "peak", peak, truth_mean),
        make_report("rms", "direct", direct, truth_mean),
    };
    // The headline claim: the cycle-locked method beats the peak shortcut.
    if (*res.direct.error_abs >= *res.peak.error_abs)
        throw inconsistency_error("rms protocol: direct method did not beat peak method");
    return res;
}

struct PowerOptions {
    int n = 30;
    double interval_virtual_s = 60.0;
};

/// Agreement of the two power estimates on a resistive load: statistics of
/// the per-reading difference s - p, with mean apparent power as reference.
inline ValidationReport run_power_protocol(const Scenario& scenario, PowerOptions opt = {}) {
    scenario.validate();
    if (scenario.waveform.load.kind != sim::LoadKind::resistive)
        throw domain_error("power protocol: requires a resistive scenario");
    if (opt.n < 2) throw domain_error("power protocol: need n >= 2");

    const std::int64_t duration =
        detail::warmup_us(scenario) + detail::cycles_us(scenario, 20.0);
    std::vector<double> diffs;
    std::vector<double> apparents;
    for (int j = 0; j < opt.n; ++j) {
        const auto t_j =
            static_cast<std::int64_t>(j * opt.interval_virtual_s * 1e6);
        auto cap = detail::capture(scenario, t_j, static_cast<std::uint64_t>(j), duration);
        auto m = meter::measure(cap.v, cap.i, scenario.chain, scenario.meter_config());
        diffs.push_back(m.s_apparent - m.p_active);
        apparents.push_back(m.s_apparent);
    }

    const double s_mean = stats(apparents).mean;
    ValidationReport r = make_report("power", "s_minus_p", diffs, std::nullopt);
    r.reference_value = s_mean;
    r.error_abs = std::abs(r.mean);
    if (s_mean != 0.0) r.error_pct = 100.0 * std::abs(r.mean) / s_mean;
    return r;
}

// ----------------------------------------------------------------------------
// Rendering
// ----------------------------------------------------------------------------

inline nlohmann::json report_to_json(const ValidationReport& r) {
    nlohmann::json j{
        {"protocol", r.protocol}, {"label", r.label},     {"n", r.n},
        {"mean", r.mean},         {"std_dev", r.std_dev}, {"std_dev_kind", "population"},
    };
    if (r.reference_value) j["reference_value"] = *r.reference_value;
    if (r.error_abs) j["error_abs"] = *r.error_abs;
    if (r.error_pct) j["error_pct"] = *r.error_pct;
    return j;
}

inline nlohmann::json reports_to_json(const std::vector<ValidationReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    return nlohmann::json{{"protocol", reports.empty() ? "" : reports.front().protocol},
                          {"std_dev_kind", "population"},
                          {"reports", arr}};
}

/// Fixed-width table, two decimals, matching the JSON numbers at that
/// precision.
inline std::string render_table(const std::vector<ValidationReport>& reports) {
    std::string out;
    char buf[160];
    if (!reports.empty()) {
        std::snprintf(buf, sizeof buf, "protocol: %s   n: %d   std dev: population (n divisor)\n",
                      reports.front().protocol.c_str(), reports.front().n);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-10s %12s %12s %12s %12s %12s\n", "label", "mean",
                  "std_dev", "reference", "error_abs", "error_pct");
    out += buf;
    for (const auto& r : reports) {
        auto field = [&](const std::optional<double>& v) {
            char cell[32];
            if (v) std::snprintf(cell, sizeof cell, "%12.2f", *v);
            else std::snprintf(cell, sizeof cell, "%12s", "-");
            return std::string(cell);
        };
        std::snprintf(buf, sizeof buf, "%-10s %12.2f %12.2f %s %s %s\n", r.label.c_str(),
                      r.mean, r.std_dev, field(r.reference_value).c_str(),
                      field(r.error_abs).c_str(), field(r.error_pct).c_str());
        out += buf;
    }
    return out;
}

inline std::string reports_to_csv(const std::vector<ValidationReport>& reports) {
    std::string out = "protocol,label,n,mean,std_dev,reference_value,error_abs,error_pct\n";
    char buf[256];
    for (const auto& r : reports) {
        auto field = [](const std::optional<double>& v) {
            if (!v) return std::string();
            char cell[48];
            std::snprintf(cell, sizeof cell, "%.17g", *v);
            return std::string(cell);
        };
        std::snprintf(buf, sizeof buf, "%s,%s,%d,%.17g,%.17g,%s,%s,%s\n", r.protocol.c_str(),
                      r.label.c_str(), r.n, r.mean, r.std_dev,
                      field(r.reference_value).c_str(), field(r.error_abs).c_str(),
                      field(r.error_pct).c_str());
        out += buf;
    }
    return out;
}

} // namespace voltplug::host
