#pragma once

#include "voltplug/errors.hpp"
#include "voltplug/metering.hpp"
#include "voltplug/simkernel.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <string>

namespace voltplug {

/// Slow sinusoidal wander of the mains level, the stand-in for real-world
/// drift between spaced readings. Load current tracks the voltage.
struct Drift {
    double amplitude_pct = 0.0;
    double period_s = 900.0;
};

/// A complete world + front-end description, loadable from JSON.
struct Scenario {
    std::string id = "scenario";
    sim::WaveformSpec waveform;
    sim::SensorChain chain;
    sim::AdcModel adc;
    sim::SamplerTiming timing;
    std::optional<Drift> drift;
    int offset_window = 70;

    void validate() const {
        waveform.validate();
        chain.validate();
        adc.validate();
        timing.validate();
        if (offset_window < 1)
            throw config_error("scenario: offset_window must be >= 1");
        if (drift && (drift->amplitude_pct < 0.0 || !(drift->period_s > 0.0)))
            throw config_error("scenario: bad drift parameters");
    }

    [[nodiscard]] meter::MeterConfig meter_config() const {
        meter::MeterConfig cfg;
        cfg.adc = adc;
        cfg.freq_hz = waveform.freq_hz;
        cfg.offset_window = offset_window;
        return cfg;
    }

    /// Waveform with drift applied at a point of virtual time.
    [[nodiscard]] sim::WaveformSpec waveform_at(std::int64_t t_virtual_us) const {
        sim::WaveformSpec w = waveform;
        if (drift && drift->amplitude_pct > 0.0) {
            const double t = static_cast<double>(t_virtual_us) * 1e-6;
            const double factor =
                1.0 + drift->amplitude_pct / 100.0 *
                          std::sin(2.0 * sim::k_pi * t / drift->period_s);
            w.vrms_v *= factor;
            w.load.irms_a *= factor;
        }
        return w;
    }
};

// ----------------------------------------------------------------------------
// JSON (field names mirror the domain types)
// ----------------------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k) known = true;
        if (!known) throw config_error("scenario: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"id", "waveform", "sensor_chain", "adc", "timing", "drift",
                           "metering"},
                       "scenario");
    Scenario s;
    s.id = detail::get_or<std::string>(j, "id", "scenario");

    if (j.contains("waveform")) {
        const auto& w = j.at("waveform");
        detail::check_keys(w, {"vrms", "freq_hz", "phase0_deg", "load", "noise"}, "waveform");
        s.waveform.vrms_v = detail::get_or(w, "vrms", s.waveform.vrms_v);
        s.waveform.freq_hz = detail::get_or(w, "freq_hz", s.waveform.freq_hz);
        s.waveform.phase0_deg = detail::get_or(w, "phase0_deg", s.waveform.phase0_deg);
        if (w.contains("load")) {
            const auto& l = w.at("load");
            detail::check_keys(l, {"kind", "resistance", "phase_deg", "irms", "harmonics"},
                               "load");
            const std::string kind = l.at("kind").get<std::string>();
            if (kind == "resistive") s.waveform.load.kind = sim::LoadKind::resistive;
            else if (kind == "inductive") s.waveform.load.kind = sim::LoadKind::inductive;
            else if (kind == "switched") s.waveform.load.kind = sim::LoadKind::switched;
            else throw config_error("scenario: unknown load kind '" + kind + "'");
            s.waveform.load.resistance_ohm =
                detail::get_or(l, "resistance", s.waveform.load.resistance_ohm);
            s.waveform.load.phase_deg = detail::get_or(l, "phase_deg", 0.0);
            s.waveform.load.irms_a = detail::get_or(l, "irms", 0.0);
            if (l.contains("harmonics"))
                for (const auto& h : l.at("harmonics")) {
                    detail::check_keys(h, {"order", "amplitude", "phase_deg"}, "harmonic");
                    s.waveform.load.harmonics.push_back(
                        {h.at("order").get<int>(), h.at("amplitude").get<double>(),
                         detail::get_or(h, "phase_deg", 0.0)});
                }
        }
        if (w.contains("noise")) {
            const auto& n = w.at("noise");
            detail::check_keys(n, {"sigma_v", "sigma_i", "seed"}, "noise");
            s.waveform.noise.sigma_v = detail::get_or(n, "sigma_v", 0.0);
            s.waveform.noise.sigma_i = detail::get_or(n, "sigma_i", 0.0);
            s.waveform.noise.seed = detail::get_or<std::uint64_t>(n, "seed", 0);
        }
    }

    if (j.contains("sensor_chain")) {
        const auto& c = j.at("sensor_chain");
        detail::check_keys(c,
                           {"acs_sensitivity_mv_per_a", "acs_vcc_mv", "acs_quiescent_mv",
                            "xfmr_ratio", "divider_gain", "dc_level_mv",
                            "k_v_empirical_mv_per_v", "voltage_mode"},
                           "sensor_chain");
        s.chain.acs_sensitivity_mv_per_a =
            detail::get_or(c, "acs_sensitivity_mv_per_a", s.chain.acs_sensitivity_mv_per_a);
        s.chain.acs_vcc_mv = detail::get_or(c, "acs_vcc_mv", s.chain.acs_vcc_mv);
        s.chain.acs_quiescent_mv =
            detail::get_or(c, "acs_quiescent_mv", s.chain.acs_quiescent_mv);
        s.chain.xfmr_ratio = detail::get_or(c, "xfmr_ratio", s.chain.xfmr_ratio);
        s.chain.divider_gain = detail::get_or(c, "divider_gain", s.chain.divider_gain);
        s.chain.dc_level_mv = detail::get_or(c, "dc_level_mv", s.chain.dc_level_mv);
        s.chain.k_v_empirical_mv_per_v =
            detail::get_or(c, "k_v_empirical_mv_per_v", s.chain.k_v_empirical_mv_per_v);
        if (c.contains("voltage_mode")) {
            const std::string mode = c.at("voltage_mode").get<std::string>();
            if (mode == "ideal") s.chain.voltage_mode = sim::VoltageSenseMode::ideal;
            else if (mode == "empirical") s.chain.voltage_mode = sim::VoltageSenseMode::empirical;
            else throw config_error("scenario: voltage_mode must be ideal or empirical");
        }
    }

    if (j.contains("adc")) {
        const auto& a = j.at("adc");
        detail::check_keys(a, {"bits", "vref_mv"}, "adc");
        s.adc.bits = detail::get_or(a, "bits", s.adc.bits);
        s.adc.vref_mv = detail::get_or(a, "vref_mv", s.adc.vref_mv);
    }

    if (j.contains("timing")) {
        const auto& t = j.at("timing");
        detail::check_keys(t, {"period_us", "skew_us", "start_us"}, "timing");
        s.timing.period_us = detail::get_or<std::int64_t>(t, "period_us", s.timing.period_us);
        s.timing.skew_us = detail::get_or<std::int64_t>(t, "skew_us", s.timing.skew_us);
        s.timing.start_us = detail::get_or<std::int64_t>(t, "start_us", s.timing.start_us);
    }

    if (j.contains("drift")) {
        const auto& d = j.at("drift");
        detail::check_keys(d, {"amplitude_pct", "period_s"}, "drift");
        s.drift = Drift{detail::get_or(d, "amplitude_pct", 0.0),
                        detail::get_or(d, "period_s", 900.0)};
    }

    if (j.contains("metering")) {
        const auto& m = j.at("metering");
        detail::check_keys(m, {"offset_window"}, "metering");
        s.offset_window = detail::get_or(m, "offset_window", 70);
    }

    s.validate();
    return s;
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json load{{"kind", s.waveform.load.kind == sim::LoadKind::resistive
                                     ? "resistive"
                                     : s.waveform.load.kind == sim::LoadKind::inductive
                                           ? "inductive"
                                           : "switched"}};
    switch (s.waveform.load.kind) {
    case sim::LoadKind::resistive:
        load["resistance"] = s.waveform.load.resistance_ohm;
        break;
    case sim::LoadKind::inductive:
        load["phase_deg"] = s.waveform.load.phase_deg;
        load["irms"] = s.waveform.load.irms_a;
        break;
    case sim::LoadKind::switched: {
        load["irms"] = s.waveform.load.irms_a;
        nlohmann::json hs = nlohmann::json::array();
        for (const auto& h : s.waveform.load.harmonics)
            hs.push_back({{"order", h.order},
                          {"amplitude", h.amplitude},
                          {"phase_deg", h.phase_deg}});
        load["harmonics"] = hs;
        break;
    }
    }

    nlohmann::json j{
        {"id", s.id},
        {"waveform",
         {{"vrms", s.waveform.vrms_v},
          {"freq_hz", s.waveform.freq_hz},
          {"phase0_deg", s.waveform.phase0_deg},
          {"load", load},
          {"noise",
           {{"sigma_v", s.waveform.noise.sigma_v},
            {"sigma_i", s.waveform.noise.sigma_i},
            {"seed", s.waveform.noise.seed}}}}},
        {"sensor_chain",
         {{"acs_sensitivity_mv_per_a", s.chain.acs_sensitivity_mv_per_a},
          {"acs_vcc_mv", s.chain.acs_vcc_mv},
          {"acs_quiescent_mv", s.chain.acs_quiescent_mv},
          {"xfmr_ratio", s.chain.xfmr_ratio},
          {"divider_gain", s.chain.divider_gain},
          {"dc_level_mv", s.chain.dc_level_mv},
          {"k_v_empirical_mv_per_v", s.chain.k_v_empirical_mv_per_v},
          {"voltage_mode",
           s.chain.voltage_mode == sim::VoltageSenseMode::ideal ? "ideal" : "empirical"}}},
        {"adc", {{"bits", s.adc.bits}, {"vref_mv", s.adc.vref_mv}}},
        {"timing",
         {{"period_us", s.timing.period_us},
          {"skew_us", s.timing.skew_us},
          {"start_us", s.timing.start_us}}},
        {"metering", {{"offset_window", s.offset_window}}},
    };
    if (s.drift)
        j["drift"] = {{"amplitude_pct", s.drift->amplitude_pct},
                      {"period_s", s.drift->period_s}};
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("scenario: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
}

} // namespace voltplug
