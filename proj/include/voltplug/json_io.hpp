#pragma once

#include "voltplug/metering.hpp"

#include <json.hpp>

#include <string>

namespace voltplug {

/// Measurement as the wire/README JSON object. phi_deg is omitted when the
/// current channel had no crossings.
inline nlohmann::json measurement_to_json(const meter::Measurement& m) {
    nlohmann::json j{
        {"vrms", m.vrms},
        {"irms", m.irms},
        {"p_active", m.p_active},
        {"s_apparent", m.s_apparent},
        {"q_reactive", m.q_reactive},
        {"t_us", m.t_us},
        {"cycles_used", m.cycles_used},
    };
    if (m.phi_deg) j["phi_deg"] = *m.phi_deg;
    return j;
}

inline meter::Measurement measurement_from_json(const nlohmann::json& j) {
    meter::Measurement m;
    m.vrms = j.at("vrms").get<double>();
    m.irms = j.at("irms").get<double>();
    m.p_active = j.at("p_active").get<double>();
    m.s_apparent = j.at("s_apparent").get<double>();
    m.q_reactive = j.at("q_reactive").get<double>();
    m.t_us = j.at("t_us").get<std::int64_t>();
    m.cycles_used = j.at("cycles_used").get<int>();
    if (j.contains("phi_deg")) m.phi_deg = j.at("phi_deg").get<double>();
    return m;
}

/// Single-line serialization used for READ responses and JSONL logs.
inline std::string measurement_to_line(const meter::Measurement& m) {
    return measurement_to_json(m).dump();
}

} // namespace voltplug
